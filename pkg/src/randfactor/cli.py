"""Command-line front end.

Exit status: 0 success, 1 validation failure, 2 usage or configuration
error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, _backend
from . import config as cfgmod
from .errors import ConfigError, RandFactorError
from .experiments import (
    SYNTHETIC_KINDS,
    generate_synthetic_panel,
    reduced_data_experiment,
    run_funnel,
    universality_compare,
    write_funnel_csv,
    write_universality_csv,
)
from .panelio import PanelFormatError, format_matrix, format_panel, ingest, read_panel, write_matrix
from .pca import pca_decompose, pca_truncate
from .randproj import FAMILIES, ProjectionSpec, SEED_MAX
from .rfm import decompose
from .stats import DataPanel, column_means
from .theory import DEFAULT_B_GRID, monte_carlo_validate

log = logging.getLogger("randfactor")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3
MIN_TRIALS = 10_000


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    log.info("wrote %s", path)


# -- commands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    panel = ingest(args.input, args.mode)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    _write(Path(args.output), format_panel(panel))
    return EXIT_OK


def _synthetic_from(section: dict, seed: int | None) -> DataPanel:
    kind = section.get("kind", "one_factor").strip()
    params = {}
    if "noise_scale" in section:
        params["noise_scale"] = cfgmod.parse_float(section["noise_scale"], "noise_scale")
    if "n_factors" in section:
        params["n_factors"] = cfgmod.parse_int(section["n_factors"], "n_factors")
    d = cfgmod.parse_int(section.get("d", "500"), "d")
    n = cfgmod.parse_int(section.get("n", "100"), "n")
    s = cfgmod.parse_int(section.get("seed", "0"), "seed") if seed is None else seed
    return generate_synthetic_panel(kind, d, n, params, s)


def cmd_gen_data(args) -> int:
    section = {}
    if args.config:
        section = dict(cfgmod.load(args.config, "experiment").get("data", {}))
    for key, value in (("kind", args.kind), ("d", args.d), ("n", args.n),
                       ("noise_scale", args.noise_scale), ("n_factors", args.n_factors)):
        if value is not None:
            section[key] = str(value)
    panel = _synthetic_from(section, args.seed)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    _write(Path(args.output), format_panel(panel))
    return EXIT_OK


def _load_data(section: dict, seed: int | None, base: Path) -> DataPanel:
    source = section.get("source", "synthetic").strip()
    if source == "synthetic":
        return _synthetic_from(section, seed)
    if source == "panel":
        if "panel" not in section:
            raise ConfigError("[data] source = panel needs a 'panel' path")
        path = Path(section["panel"])
        return read_panel(path if path.is_absolute() else base / path)
    raise ConfigError(f"[data] unknown source {source!r}")


def cmd_experiment(args) -> int:
    raw = Path(args.config).read_bytes()
    conf = cfgmod.load(args.config, "experiment")
    if "experiment" not in conf:
        raise ConfigError("config needs an [experiment] section")
    exp_section = conf["experiment"]
    config = cfgmod.experiment_config(exp_section, seed=args.seed, workers=args.workers)
    universality = cfgmod.parse_bool(exp_section.get("universality", "false"), "universality")
    panel = _load_data(conf.get("data", {}), args.seed, Path(args.config).parent)
    if panel.preprocessing == "raw":
        raise ConfigError("experiment needs a centered or standardized panel")
    outputs = conf.get("output", {})
    out = _out_dir(args)
    written = []

    name = outputs.get("funnel", "funnel.csv")
    _write(out / name, write_funnel_csv(run_funnel(panel, config)))
    written.append(name)
    if config.remove_market:
        name = outputs.get("reduced", "funnel_reduced.csv")
        _write(out / name, write_funnel_csv(reduced_data_experiment(panel, config)))
        written.append(name)
    if universality:
        name = outputs.get("universality", "universality.csv")
        _write(out / name, write_universality_csv(universality_compare(panel, config)))
        written.append(name)

    manifest = {
        "command": "experiment",
        "config_sha256": hashlib.sha256(raw).hexdigest(),
        "base_seed": config.base_seed,
        "panel": {"d": panel.d, "N": panel.N, "preprocessing": panel.preprocessing},
        "outputs": written,
        "backend": _backend.BACKEND,
        "versions": {"randfactor": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }
    name = outputs.get("manifest", "manifest.json")
    _write(out / name, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _theory_vectors(section: dict, d: int, seed: int):
    source = section.get("vectors", "synthetic").strip()
    if source == "synthetic":
        rho = cfgmod.parse_float(section.get("correlation", "0.5"), "correlation")
        if not -1.0 <= rho <= 1.0:
            raise ConfigError("correlation must lie in [-1, 1]")
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x7E,)))
        z1, z2 = rng.standard_normal((2, d))
        u = z1 - z1.mean()
        u /= u.std(ddof=1)
        w = z2 - z2.mean()
        w -= (w @ u) / (u @ u) * u
        w /= w.std(ddof=1)
        v = rho * u + np.sqrt(1.0 - rho * rho) * w
        v -= v.mean()
        v /= v.std(ddof=1)
        return u, v
    if source == "panel":
        panel = read_panel(section["panel"])
        ids = panel.ids()
        cols = []
        for key in ("u_column", "v_column"):
            name = section.get(key)
            if name is None:
                raise ConfigError(f"[theory] {key} is required with vectors = panel")
            if name in ids:
                cols.append(ids.index(name))
            else:
                cols.append(cfgmod.parse_int(name, key))
        X = panel.values[:, cols]
        X = X - column_means(X)
        return X[:, 0].copy(), X[:, 1].copy()
    raise ConfigError(f"[theory] unknown vectors source {source!r}")


def cmd_validate_theory(args) -> int:
    section = {}
    if args.config:
        section = dict(cfgmod.load(args.config, "theory").get("theory", {}))
    for key in ("family", "k", "d", "trials", "scale"):
        value = getattr(args, key)
        if value is not None:
            section[key] = str(value)
    family = section.get("family", "gaussian").strip()
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}")
    k = cfgmod.parse_int(section.get("k", "10"), "k")
    trials = cfgmod.parse_int(section.get("trials", "100000"), "trials")
    if trials < MIN_TRIALS:
        raise ConfigError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    seed = args.seed if args.seed is not None else cfgmod.parse_int(section.get("seed", "0"), "seed")
    scale = cfgmod.parse_scale(section.get("scale", "covariance"))
    b_grid = tuple(cfgmod.parse_float(b, "b_grid") for b in cfgmod.parse_list(section["b_grid"])) \
        if "b_grid" in section else DEFAULT_B_GRID
    if section.get("vectors", "synthetic").strip() == "panel":
        u, v = _theory_vectors(section, 0, seed)
        d = u.size
    else:
        d = cfgmod.parse_int(section.get("d", "100"), "d")
        if d < 4:
            raise ConfigError("d must be >= 4")
        u, v = _theory_vectors(section, d, seed)
    if k < 1:
        raise ConfigError("k must be >= 1")
    report = monte_carlo_validate(u, v, ProjectionSpec(family, k, d, seed), trials, scale=scale,
                                  b_grid=b_grid, workers=args.workers)
    out = _out_dir(args)
    _write(out / "theory_report.csv", report.to_csv())
    for row in report.rows:
        if row.verdict != "PASS":
            log.warning("%s %s: closed form %.6g, estimate %.6g, z %.2f",
                        row.verdict, row.quantity, row.closed_form, row.estimate, row.z)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_pca(args) -> int:
    panel = read_panel(args.panel)
    decomp = pca_decompose(panel)
    k = args.k if args.k is not None else decomp.rank_bound
    F, L = pca_truncate(decomp, k)
    out = _out_dir(args)
    names = [f"pc{j + 1}" for j in range(k)]
    _write(out / "singular_values.csv", format_matrix(decomp.singular_values[:, None], ["singular_value"]))
    _write(out / "pca_factors.csv", format_matrix(F, names))
    _write(out / "pca_loadings.csv", format_matrix(L, names))
    return EXIT_OK


def cmd_project(args) -> int:
    panel = read_panel(args.panel)
    scale = cfgmod.parse_scale(args.scale)
    seed = args.seed if args.seed is not None else 0
    dec = decompose(panel, ProjectionSpec(args.family, args.k, panel.d, seed), scale=scale)
    out = _out_dir(args)
    names = [f"f{j + 1}" for j in range(args.k)]
    projected = DataPanel(dec.reconstruction, "raw", panel.series_ids)
    _write(out / "projected.csv", format_panel(projected))
    write_matrix(dec.factors, names, out / "rfm_factors.csv")
    write_matrix(dec.loadings, names, out / "rfm_loadings.csv")
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--seed", type=_seed, metavar="U64")
    common.add_argument("--workers", type=_positive, default=os.cpu_count() or 1, metavar="INT")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="randfactor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"randfactor {__version__} ({_backend.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="CSV of prices or returns -> standardized panel file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--mode", choices=("prices", "returns"), default="prices")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("gen-data", parents=[common], help="write a synthetic standardized panel")
    p.add_argument("--kind", choices=SYNTHETIC_KINDS)
    p.add_argument("--d", type=_positive)
    p.add_argument("--n", type=_positive)
    p.add_argument("--noise-scale", type=float)
    p.add_argument("--n-factors", type=_positive)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("experiment", parents=[common], help="run funnel / reduced / universality experiments")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("validate-theory", parents=[common], help="Monte Carlo check of the closed-form moments")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--scale", help="covariance (default), mean, or a positive number")
    p.set_defaults(func=cmd_validate_theory)

    p = sub.add_parser("pca", parents=[common], help="PCA factors and loadings of a panel file")
    p.add_argument("--panel", required=True)
    p.add_argument("--k", type=_positive)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("project", parents=[common], help="RFM projection of a panel file")
    p.add_argument("--panel", required=True)
    p.add_argument("--family", choices=FAMILIES, default="gaussian")
    p.add_argument("--k", type=_positive, required=True)
    p.add_argument("--scale", default="covariance")
    p.set_defaults(func=cmd_project)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "experiment" and not args.config:
        parser.error("experiment requires --config")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, PanelFormatError):
            print(f"randfactor: I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        if isinstance(exc, RandFactorError) and not isinstance(exc, ConfigError):
            print(f"randfactor: validation error: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        print(f"randfactor: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RandFactorError as exc:
        print(f"randfactor: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"randfactor: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

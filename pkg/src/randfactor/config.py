"""INI-style configuration (``[section]`` headers, ``key = value`` lines).

Unknown sections and keys are rejected.
"""
from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ConfigError
from .experiments import METRICS, ExperimentConfig
from .randproj import FAMILIES

EXPERIMENT_KEYS = {
    "k_grid", "ensemble_size", "families", "pair_sample", "metrics", "remove_market",
    "base_seed", "include_pca", "aggregation", "scale", "universality",
}
DATA_KEYS = {"source", "kind", "d", "n", "seed", "noise_scale", "n_factors", "panel"}
OUTPUT_KEYS = {"funnel", "reduced", "universality", "manifest"}
THEORY_KEYS = {"family", "k", "d", "trials", "seed", "scale", "b_grid", "vectors", "panel",
               "u_column", "v_column", "correlation"}

SCHEMAS = {
    "experiment": {"experiment": EXPERIMENT_KEYS, "data": DATA_KEYS, "output": OUTPUT_KEYS},
    "theory": {"theory": THEORY_KEYS},
}


def load(path, schema: str) -> dict[str, dict[str, str]]:
    """Parse ``path`` and check it against the named schema."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    text = Path(path).read_text()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    allowed = SCHEMAS[schema]
    out = {}
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(f"{path}: unknown section [{section}]")
        keys = dict(parser.items(section))
        unknown = set(keys) - allowed[section]
        if unknown:
            raise ConfigError(f"{path}: unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
        out[section] = keys
    return out


def parse_int(value, name) -> int:
    try:
        return int(str(value).strip())
    except ValueError:
        raise ConfigError(f"{name}: expected an integer, got {value!r}") from None


def parse_float(value, name) -> float:
    try:
        return float(str(value).strip())
    except ValueError:
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None


def parse_bool(value, name) -> bool:
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{name}: expected a boolean, got {value!r}")


def parse_scale(value):
    """``covariance``, ``mean`` or a positive number."""
    v = str(value).strip()
    if v in ("covariance", "mean"):
        return v
    a = parse_float(v, "scale")
    if not a > 0.0:
        raise ConfigError(f"scale must be positive, got {v}")
    return a


def parse_list(value) -> list[str]:
    return [x.strip() for x in str(value).split(",") if x.strip()]


def experiment_config(section: dict[str, str], seed: int | None = None, workers: int = 1) -> ExperimentConfig:
    if "k_grid" not in section:
        raise ConfigError("[experiment] k_grid is required")
    families = parse_list(section.get("families", "gaussian"))
    if families == ["all"]:
        families = list(FAMILIES)
    metrics = parse_list(section.get("metrics", ",".join(METRICS)))
    pair = section.get("pair_sample", "20000").strip()
    kwargs = dict(
        k_grid=tuple(parse_int(k, "k_grid") for k in parse_list(section["k_grid"])),
        ensemble_size=parse_int(section.get("ensemble_size", "1000"), "ensemble_size"),
        families=tuple(families),
        pair_sample="all" if pair == "all" else parse_int(pair, "pair_sample"),
        metrics=tuple(metrics),
        remove_market=parse_bool(section.get("remove_market", "false"), "remove_market"),
        base_seed=parse_int(section.get("base_seed", "0"), "base_seed") if seed is None else seed,
        include_pca=parse_bool(section.get("include_pca", "true"), "include_pca"),
        aggregation=section.get("aggregation", "pooled").strip(),
        scale=parse_scale(section.get("scale", "covariance")),
        workers=workers,
    )
    return ExperimentConfig(**kwargs)

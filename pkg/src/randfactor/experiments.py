"""Ensemble experiments: error funnels of RFM reconstructions against PCA.

Errors are kept in natural units here (correlation difference, covariance
difference, volatility difference).  :func:`write_funnel_csv` converts the
correlation, covariance and volatility metrics to percentage points.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DimensionError, ZeroVarianceError
from .pca import pca_decompose, remove_market_factor
from .randproj import FAMILIES, ProjectionSpec, check_family, draw_projection, make_rng, resolve_scale
from .rfm import apply_projection
from .stats import DataPanel, standardize

METRICS = ("rmse", "volatility_error", "corr_error", "corr_abs_error", "cov_error", "cov_abs_error")
PERCENT_METRICS = frozenset(METRICS) - {"rmse"}
AGGREGATIONS = ("pooled", "per_model")
FUNNEL_COLUMNS = ("k", "family", "metric", "reduced", "median", "p25", "p75", "n_samples", "n_skipped")
UNIVERSALITY_BAND = 0.20


@dataclass(frozen=True)
class ExperimentConfig:
    k_grid: tuple[int, ...]
    ensemble_size: int = 1000
    families: tuple[str, ...] = ("gaussian",)
    pair_sample: int | str = 20000
    metrics: tuple[str, ...] = METRICS
    remove_market: bool = False
    base_seed: int = 0
    include_pca: bool = True
    aggregation: str = "pooled"
    scale: str | float = "covariance"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "k_grid", tuple(int(k) for k in self.k_grid))
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if not self.k_grid or min(self.k_grid) < 1:
            raise ConfigError("k_grid must be non-empty with every k >= 1")
        if self.ensemble_size < 1:
            raise ConfigError("ensemble_size must be >= 1")
        for f in self.families:
            try:
                check_family(f)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        unknown = set(self.metrics) - set(METRICS)
        if unknown:
            raise ConfigError(f"unknown metrics: {sorted(unknown)}")
        if self.pair_sample != "all" and (not isinstance(self.pair_sample, int) or self.pair_sample < 1):
            raise ConfigError("pair_sample must be a positive integer or 'all'")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"aggregation must be one of {AGGREGATIONS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if isinstance(self.scale, str):
            if self.scale not in ("covariance", "mean"):
                raise ConfigError(f"scale must be 'covariance', 'mean' or a positive number, got {self.scale!r}")
        elif not float(self.scale) > 0.0:
            raise ConfigError("scale must be positive")


@dataclass(frozen=True)
class FunnelRow:
    k: int
    family: str
    metric: str
    median: float
    p25: float
    p75: float
    n_samples: int
    n_skipped: int = 0
    reduced: bool = False


# -- metrics ---------------------------------------------------------------

def reconstruction_rmse(X, X_hat) -> float:
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    if X.shape != X_hat.shape:
        raise DimensionError(f"shape mismatch {X.shape} vs {X_hat.shape}")
    return float(np.sqrt(np.mean((X - X_hat) ** 2)))


def _col_cov(X, b, c):
    x = X[:, b] - X[:, b].mean()
    y = X[:, c] - X[:, c].mean()
    return float(x @ y) / (X.shape[0] - 1)


def corr_error(X, X_hat, pair) -> tuple[float, float]:
    """``corr(X_hat_b, X_hat_c) - corr(X_b, X_c)`` and its absolute value."""
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    b, c = pair
    out = []
    for M in (X_hat, X):
        vb, vc = _col_cov(M, b, b), _col_cov(M, c, c)
        for col, var in ((b, vb), (c, vc)):
            if var <= 0.0:
                raise ZeroVarianceError(col)
        out.append(_col_cov(M, b, c) / math.sqrt(vb * vc))
    err = out[0] - out[1]
    return err, abs(err)


def cov_error(X, X_hat, pair) -> tuple[float, float]:
    b, c = pair
    err = _col_cov(np.asarray(X_hat, float), b, c) - _col_cov(np.asarray(X, float), b, c)
    return err, abs(err)


def volatility_error(X, X_hat, b: int) -> float:
    """``sigma(X_hat_b) - sigma(X_b)``; relative to volatility on standardized input."""
    X = np.asarray(X, dtype=np.float64)
    X_hat = np.asarray(X_hat, dtype=np.float64)
    return math.sqrt(_col_cov(X_hat, b, b)) - math.sqrt(_col_cov(X, b, b))


def percentile_summary(x: np.ndarray) -> tuple[float, float, float]:
    """Median, 25th and 75th percentiles (linear interpolation between order statistics)."""
    if x.size == 0:
        return math.nan, math.nan, math.nan
    p25, med, p75 = np.percentile(x, [25.0, 50.0, 75.0])
    return float(med), float(p25), float(p75)


# -- pairs and seeds ---------------------------------------------------------

def sample_pairs(N: int, pair_sample, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Series pairs ``b < c``; all of them, or a seeded sample without replacement."""
    bi, ci = np.triu_indices(N, 1)
    total = bi.size
    if pair_sample == "all" or pair_sample >= total:
        return bi, ci
    idx = np.sort(make_rng(seed, 0xFA12).choice(total, size=pair_sample, replace=False))
    return bi[idx], ci[idx]


def trial_seed(base_seed: int, k: int, family: str, trial: int) -> int:
    """Independent 64-bit seed for one ensemble member."""
    ss = np.random.SeedSequence([int(base_seed), int(k), FAMILIES.index(family), int(trial)])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


# -- per-model evaluation ----------------------------------------------------

@dataclass
class _Reference:
    X: np.ndarray
    cov: np.ndarray
    std: np.ndarray
    corr: np.ndarray
    bi: np.ndarray
    ci: np.ndarray
    valid_cols: np.ndarray


def _reference(X: np.ndarray, bi, ci) -> _Reference:
    d = X.shape[0]
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / (d - 1)
    var = np.diag(cov).copy()
    valid = var > 0.0
    std = np.sqrt(var)
    safe = np.where(valid, std, 1.0)
    corr = cov / np.outer(safe, safe)
    return _Reference(X, cov, std, corr, bi, ci, valid)


def model_errors(ref: _Reference, X_hat: np.ndarray, metrics) -> tuple[dict, int]:
    """Errors of one reconstruction for every requested metric, and the skipped-pair count."""
    d = X_hat.shape[0]
    out = {}
    Xc = X_hat - X_hat.mean(axis=0)
    cov = Xc.T @ Xc / (d - 1)
    var = np.diag(cov).copy()
    valid = (var > 0.0) & ref.valid_cols
    keep = valid[ref.bi] & valid[ref.ci]
    bi, ci = ref.bi[keep], ref.ci[keep]
    skipped = int(ref.bi.size - bi.size)
    if "rmse" in metrics:
        out["rmse"] = np.array([reconstruction_rmse(ref.X, X_hat)])
    if "volatility_error" in metrics:
        out["volatility_error"] = np.sqrt(var) - ref.std
    if "corr_error" in metrics or "corr_abs_error" in metrics:
        std = np.sqrt(var)
        err = cov[bi, ci] / (std[bi] * std[ci]) - ref.corr[bi, ci]
        if "corr_error" in metrics:
            out["corr_error"] = err
        if "corr_abs_error" in metrics:
            out["corr_abs_error"] = np.abs(err)
    if "cov_error" in metrics or "cov_abs_error" in metrics:
        err = cov[ref.bi, ref.ci] - ref.cov[ref.bi, ref.ci]
        if "cov_error" in metrics:
            out["cov_error"] = err
        if "cov_abs_error" in metrics:
            out["cov_abs_error"] = np.abs(err)
    return out, skipped


def _summarise(k, family, metrics, per_model, skipped, aggregation, reduced) -> list[FunnelRow]:
    rows = []
    for metric in metrics:
        arrays = [m[metric] for m in per_model]
        if aggregation == "per_model" and len(arrays) > 1:
            values = np.array([np.median(a) for a in arrays if a.size])
        else:
            values = np.concatenate(arrays) if arrays else np.zeros(0)
        med, p25, p75 = percentile_summary(values)
        rows.append(FunnelRow(k, family, metric, med, p25, p75, int(values.size), skipped, reduced))
    return rows


def _rfm_member(ref, family, k, seed, scale, metrics):
    d = ref.X.shape[0]
    B = draw_projection(ProjectionSpec(family, k, d, seed))
    a = resolve_scale(family, k, d, scale)
    return model_errors(ref, apply_projection(ref.X, B, a), metrics)


def run_funnel(panel: DataPanel, config: ExperimentConfig, reduced: bool = False) -> list[FunnelRow]:
    """Median and quartiles of every configured metric, per ``(k, family)``.

    RFM percentiles pool all sampled pairs over all ensemble members (or
    summarise per-model medians with ``aggregation="per_model"``).  PCA rows
    (family ``"pca"``) are deterministic and use pairs only.
    """
    panel.require_centered()
    X = panel.values
    d, N = X.shape
    bi, ci = sample_pairs(N, config.pair_sample, config.base_seed)
    ref = _reference(X, bi, ci)
    metrics = config.metrics
    rows: list[FunnelRow] = []
    decomp = pca_decompose(panel) if config.include_pca else None
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for k in config.k_grid:
            for family in config.families:
                seeds = [trial_seed(config.base_seed, k, family, t) for t in range(config.ensemble_size)]

                def member(seed, family=family, k=k):
                    return _rfm_member(ref, family, k, seed, config.scale, metrics)

                results = list(executor.map(member, seeds)) if executor else [member(s) for s in seeds]
                skipped = sum(r[1] for r in results)
                rows.extend(_summarise(k, family, metrics, [r[0] for r in results], skipped,
                                       config.aggregation, reduced))
            if decomp is not None and k <= decomp.rank_bound:
                errs, skipped = model_errors(ref, decomp.reconstruct(k), metrics)
                rows.extend(_summarise(k, "pca", metrics, [errs], skipped, "pooled", reduced))
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


def reduced_data_experiment(panel: DataPanel, config: ExperimentConfig, degenerate_tol: float = 1e-8) -> list[FunnelRow]:
    """Funnels on the panel with its first principal component removed.

    If nothing is left (``|reduced| <= tol |X|``, e.g. rank-1 data) every row
    reports zero samples and all pairs as skipped.
    """
    reduced = remove_market_factor(panel)
    norm = np.linalg.norm(panel.values)
    if np.linalg.norm(reduced.values) <= degenerate_tol * norm:
        n_pairs = sample_pairs(panel.N, config.pair_sample, config.base_seed)[0].size
        fams = list(config.families) + (["pca"] if config.include_pca else [])
        return [FunnelRow(k, f, m, math.nan, math.nan, math.nan, 0, n_pairs, True)
                for k in config.k_grid for f in fams for m in config.metrics]
    return run_funnel(reduced, config, reduced=True)


@dataclass(frozen=True)
class UniversalityRow:
    k: int
    family: str
    median_abs_corr_error: float
    gaussian_median: float
    ratio: float
    status: str  # pass / fail / excluded / unassessed


def universality_compare(panel: DataPanel, config: ExperimentConfig, band: float = UNIVERSALITY_BAND,
                         min_k: int = 10) -> list[UniversalityRow]:
    """Median absolute correlation error of every family relative to the Gaussian one.

    Families are assessed for ``k >= min_k``.  Below that rows are
    ``unassessed``; the column-normalised family is ``excluded`` for k < 5.
    """
    if set(config.families) != set(FAMILIES):
        raise ConfigError("universality_compare needs all six families")
    cfg = replace(config, metrics=("corr_abs_error",), include_pca=False)
    rows = run_funnel(panel, cfg)
    med = {(r.k, r.family): r.median for r in rows}
    out = []
    for k in cfg.k_grid:
        g = med[(k, "gaussian")]
        for family in FAMILIES:
            m = med[(k, family)]
            ratio = m / g if g > 0 else math.nan
            if family == "column_normalized_gaussian" and k < 5:
                status = "excluded"
            elif k < min_k:
                status = "unassessed"
            else:
                status = "pass" if abs(ratio - 1.0) <= band else "fail"
            out.append(UniversalityRow(k, family, m, g, ratio, status))
    return out


# -- synthetic data ------------------------------------------------------------

SYNTHETIC_KINDS = ("iid_gaussian", "one_factor", "multi_factor")


def generate_synthetic_panel(kind: str, d: int, N: int, params: dict | None = None, seed: int = 0) -> DataPanel:
    """Standardized synthetic panel.

    ``iid_gaussian``: N(0,1) entries.  ``one_factor``: ``beta_b f_t + noise``
    with ``betas`` (default U(0.5, 1.5)) and ``noise_scale`` (default 1).
    ``multi_factor``: ``n_factors`` such terms (default 3); the first
    factor's loadings default to U(0.5, 1.5), the others to N(0, 0.5^2).
    """
    params = dict(params or {})
    if kind not in SYNTHETIC_KINDS:
        raise ConfigError(f"unknown synthetic kind {kind!r}")
    if d < 2 or N < 1:
        raise ConfigError("need d >= 2 and N >= 1")
    rng = make_rng(seed)
    noise_scale = float(params.pop("noise_scale", 1.0))
    if noise_scale < 0:
        raise ConfigError("noise_scale must be >= 0")
    if kind == "iid_gaussian":
        if params:
            raise ConfigError(f"unknown parameters for iid_gaussian: {sorted(params)}")
        X = rng.standard_normal((d, N))
    else:
        r = 1 if kind == "one_factor" else int(params.pop("n_factors", 3))
        if r < 1:
            raise ConfigError("n_factors must be >= 1")
        betas = params.pop("betas", None)
        if params:
            raise ConfigError(f"unknown parameters for {kind}: {sorted(params)}")
        if betas is None:
            betas = np.empty((N, r))
            betas[:, 0] = rng.uniform(0.5, 1.5, size=N)
            if r > 1:
                betas[:, 1:] = 0.5 * rng.standard_normal((N, r - 1))
        betas = np.asarray(betas, dtype=np.float64).reshape(N, r)
        factors = rng.standard_normal((d, r))
        X = factors @ betas.T + noise_scale * rng.standard_normal((d, N))
    return standardize(DataPanel(X))


# -- output ------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def write_funnel_csv(rows, fh=None) -> str:
    """Funnel rows as CSV; non-RMSE metrics are written in percentage points."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FUNNEL_COLUMNS)
    for r in rows:
        f = 100.0 if r.metric in PERCENT_METRICS else 1.0
        w.writerow([r.k, r.family, r.metric, "true" if r.reduced else "false",
                    _fmt(f * r.median), _fmt(f * r.p25), _fmt(f * r.p75), r.n_samples, r.n_skipped])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def write_universality_csv(rows, fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("k", "family", "median_abs_corr_error", "gaussian_median", "ratio", "status"))
    for r in rows:
        w.writerow([r.k, r.family, _fmt(100.0 * r.median_abs_corr_error), _fmt(100.0 * r.gaussian_median),
                    _fmt(r.ratio), r.status])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text

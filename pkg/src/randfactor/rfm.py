"""The random factor model ``PX = a B^T B X`` and its factor/loading form.

``P`` is never materialised: products are evaluated as ``a * B^T (B X)``,
which costs O(k d N) instead of O(d^2 N).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .randproj import (
    ProjectionSpec,
    draw_projection,
    draw_projection_batch,
    factor_scale,
    make_rng,
    resolve_scale,
)
from .stats import DataPanel


@dataclass(frozen=True)
class RfmDecomposition:
    """``X = F L^T + residual`` for one realised projection matrix."""

    factors: np.ndarray  # d x k, a' B^T
    loadings: np.ndarray  # N x k, (a/a') X^T B^T
    residual: np.ndarray  # d x N, X - F L^T
    spec: ProjectionSpec
    a: float
    a_prime: float

    @property
    def reconstruction(self) -> np.ndarray:
        return self.factors @ self.loadings.T


@dataclass(frozen=True)
class RandomLoadingDecomposition:
    """``XQ = a X R^T R`` split into factors ``a' X R^T`` and loadings ``(a/a') R^T``."""

    factors: np.ndarray  # d x k
    loadings: np.ndarray  # N x k
    R: np.ndarray  # k x N
    a: float
    a_prime: float

    @property
    def projected(self) -> np.ndarray:
        return self.factors @ self.loadings.T


def _check(panel: DataPanel, spec: ProjectionSpec):
    if spec.d != panel.d:
        raise DimensionError(f"spec has d={spec.d} but panel has d={panel.d} observations")
    panel.require_centered()


def apply_projection(X: np.ndarray, B: np.ndarray, a: float) -> np.ndarray:
    """``a B^T (B X)`` for an explicit matrix ``B``."""
    return a * (B.T @ (B @ X))


def project(panel: DataPanel, spec: ProjectionSpec, scale="covariance") -> np.ndarray:
    """Projected data ``PX`` (d x N).

    ``scale`` is ``"covariance"`` (default, preserves covariances in
    expectation), ``"mean"`` (``E[PX] = X``) or an explicit positive number.
    """
    _check(panel, spec)
    a = resolve_scale(spec.family, spec.k, spec.d, scale)
    return apply_projection(panel.values, draw_projection(spec), a)


def decompose(panel: DataPanel, spec: ProjectionSpec, scale="covariance") -> RfmDecomposition:
    _check(panel, spec)
    a = resolve_scale(spec.family, spec.k, spec.d, scale)
    a_prime = factor_scale(spec.d)
    B = draw_projection(spec)
    X = panel.values
    F = a_prime * B.T
    L = (a / a_prime) * (B @ X).T
    residual = X - F @ L.T
    return RfmDecomposition(F, L, residual, spec, a, a_prime)


def random_loading_project(panel: DataPanel, spec: ProjectionSpec, scale="covariance") -> RandomLoadingDecomposition:
    """Project in the series direction: ``R`` is ``k x N`` and ``spec.d`` must equal ``N``."""
    if spec.d != panel.N:
        raise DimensionError(f"spec has d={spec.d} but panel has N={panel.N} series")
    a = resolve_scale(spec.family, spec.k, spec.d, scale)
    a_prime = factor_scale(spec.d)
    R = draw_projection(spec)
    factors = a_prime * (panel.values @ R.T)
    loadings = (a / a_prime) * R.T
    return RandomLoadingDecomposition(factors, loadings, R, a, a_prime)


def factor_gram(F: np.ndarray) -> np.ndarray:
    """Inner products ``sum_m F_mj F_mj'`` of the factor columns."""
    return F.T @ F


@dataclass(frozen=True)
class GramStats:
    """Empirical moments of factor inner products over an ensemble.

    Standard errors are computed from per-trial aggregates, since entries
    within one trial are not independent.
    """

    diag_mean: float
    diag_mean_se: float
    diag_var: float
    diag_var_se: float
    off_mean: float
    off_mean_se: float
    off_var: float
    off_var_se: float
    trials: int
    n_diag: int
    n_off: int


def _pooled_moments(x: np.ndarray):
    """Mean, variance and their trial-clustered standard errors of ``x`` (trials x entries)."""
    T = x.shape[0]
    mean = float(x.mean())
    per_trial_mean = x.mean(axis=1)
    dev2 = ((x - mean) ** 2).mean(axis=1)
    n = x.size
    var = float(dev2.mean()) * n / (n - 1)
    mean_se = float(per_trial_mean.std(ddof=1) / np.sqrt(T))
    var_se = float(dev2.std(ddof=1) / np.sqrt(T))
    return mean, mean_se, var, var_se


def gram_stats_from_entries(diag: np.ndarray, off: np.ndarray) -> GramStats:
    T = diag.shape[0]
    dm, dm_se, dv, dv_se = _pooled_moments(diag)
    if off.shape[1]:
        om, om_se, ov, ov_se = _pooled_moments(off)
    else:
        om = om_se = ov = ov_se = float("nan")
    return GramStats(dm, dm_se, dv, dv_se, om, om_se, ov, ov_se, T, diag.size, off.size)


def factor_gram_stats(
    family: str,
    k: int,
    d: int,
    trials: int,
    seed: int = 0,
    a_prime: float | None = None,
    max_factors: int = 8,
    chunk: int = 2048,
) -> GramStats:
    """Mean/variance of diagonal and off-diagonal factor inner products.

    Factors are ``a' B^T`` with ``a' = 1/sqrt(d)`` unless given.  Only the
    first ``max_factors`` factors enter (entries are exchangeable).
    """
    from . import _backend

    if trials < 100:
        raise ValueError("factor_gram_stats needs trials >= 100")
    ap = factor_scale(d) if a_prime is None else float(a_prime)
    diags, offs = [], []
    for c, start in enumerate(range(0, trials, chunk)):
        n = min(chunk, trials - start)
        B = draw_projection_batch(family, k, d, n, make_rng(seed, c))
        dg, of = _backend.gram_batch(B, max_factors)
        diags.append(dg)
        offs.append(of)
    return gram_stats_from_entries(ap * ap * np.concatenate(diags), ap * ap * np.concatenate(offs))

"""Data panels and the sample statistics every other module builds on.

A panel is a ``d x N`` matrix: rows are observations (time), columns are
series.  Covariances use the ``1/(d-1)`` normalisation throughout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSampleError,
    DimensionError,
    DomainError,
    PreconditionError,
    ZeroVarianceError,
)

PREPROCESSING = ("raw", "centered", "standardized")

CENTER_TOL = 1e-12
UNIT_STD_TOL = 1e-10


def _as_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-d vector, got shape {x.shape}")
    return x


def _two_pass_mean(values: np.ndarray, axis=0) -> np.ndarray:
    # second pass removes the rounding left by the naive mean
    mu = values.mean(axis=axis, keepdims=True)
    mu = mu + (values - mu).mean(axis=axis, keepdims=True)
    return np.squeeze(mu, axis=axis)


def sample_mean(x) -> float:
    """Arithmetic mean ``(1/d) sum x_m``."""
    x = _as_vector(x)
    if x.size == 0:
        raise DimensionError("sample_mean of an empty vector")
    return float(_two_pass_mean(x))


def sample_cov(x, y) -> float:
    """Sample covariance with the ``1/(d-1)`` normalisation."""
    x = _as_vector(x)
    y = _as_vector(y)
    if x.shape != y.shape:
        raise DimensionError(f"length mismatch: {x.size} vs {y.size}")
    d = x.size
    if d < 2:
        raise DegenerateSampleError("sample covariance needs at least 2 observations")
    dx = x - _two_pass_mean(x)
    dy = y - _two_pass_mean(y)
    return float(dx @ dy / (d - 1))


def sample_var(x) -> float:
    return sample_cov(x, x)


def sample_std(x) -> float:
    return float(np.sqrt(sample_var(x)))


def sample_corr(x, y) -> float:
    """Pearson correlation; raises :class:`ZeroVarianceError` if either side is constant."""
    sxy = sample_cov(x, y)
    sxx = sample_var(x)
    syy = sample_var(y)
    if sxx <= 0.0:
        raise ZeroVarianceError(0, "x has zero variance")
    if syy <= 0.0:
        raise ZeroVarianceError(1, "y has zero variance")
    return float(np.clip(sxy / np.sqrt(sxx * syy), -1.0, 1.0))


def column_means(values: np.ndarray) -> np.ndarray:
    return _two_pass_mean(np.asarray(values, dtype=np.float64), axis=0)


def covariance_matrix(values: np.ndarray) -> np.ndarray:
    """``N x N`` sample covariance of the columns of a ``d x N`` matrix."""
    values = np.asarray(values, dtype=np.float64)
    d = values.shape[0]
    if d < 2:
        raise DegenerateSampleError("covariance needs at least 2 observations")
    centered = values - column_means(values)
    return centered.T @ centered / (d - 1)


def correlation_matrix(values: np.ndarray) -> np.ndarray:
    cov = covariance_matrix(values)
    std = np.sqrt(np.diag(cov))
    zero = np.flatnonzero(std <= 0.0)
    if zero.size:
        raise ZeroVarianceError(int(zero[0]))
    corr = cov / np.outer(std, std)
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def log_returns(prices) -> np.ndarray:
    """``r_t = ln(p_{t+1} / p_t)``; accepts a vector or a ``(d+1) x N`` matrix."""
    prices = np.asarray(prices, dtype=np.float64)
    if prices.shape[0] < 2:
        raise DegenerateSampleError("need at least two prices for one return")
    bad = np.argwhere(~(prices > 0.0))
    if bad.size:
        raise DomainError(f"non-positive price at index {tuple(int(i) for i in bad[0])}")
    return np.diff(np.log(prices), axis=0)


def is_centered(values: np.ndarray, tol: float = CENTER_TOL) -> bool:
    """True if every column mean is within ``tol`` of the column's max-abs value."""
    values = np.asarray(values, dtype=np.float64)
    scale = np.max(np.abs(values), axis=0)
    return bool(np.all(np.abs(column_means(values)) <= tol * np.maximum(scale, np.finfo(float).tiny)))


@dataclass(frozen=True)
class DataPanel:
    """Immutable ``d x N`` observation matrix with its preprocessing state.

    ``values`` is stored as a read-only float64 copy.  Construction checks
    the invariants implied by ``preprocessing``.
    """

    values: np.ndarray
    preprocessing: str = "raw"
    series_ids: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DimensionError(f"panel must be 2-d, got shape {values.shape}")
        if values.shape[0] < 2:
            raise DegenerateSampleError("panel needs d >= 2 observations")
        if values.shape[1] < 1:
            raise DimensionError("panel needs at least one series")
        if not np.all(np.isfinite(values)):
            raise DomainError("panel contains non-finite values")
        if self.preprocessing not in PREPROCESSING:
            raise ValueError(f"unknown preprocessing {self.preprocessing!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.series_ids is not None:
            ids = tuple(str(s) for s in self.series_ids)
            if len(ids) != values.shape[1]:
                raise DimensionError("series_ids length does not match N")
            object.__setattr__(self, "series_ids", ids)
        if self.preprocessing in ("centered", "standardized") and not is_centered(values):
            raise PreconditionError(f"panel marked {self.preprocessing} has nonzero column means")
        if self.preprocessing == "standardized":
            std = np.sqrt(np.diag(covariance_matrix(values)))
            bad = np.flatnonzero(np.abs(std - 1.0) > UNIT_STD_TOL)
            if bad.size:
                raise PreconditionError(f"column {int(bad[0])} of standardized panel has std {std[bad[0]]}")

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def ids(self) -> tuple[str, ...]:
        if self.series_ids is not None:
            return self.series_ids
        return tuple(f"s{j}" for j in range(self.N))

    def require_centered(self):
        if self.preprocessing == "raw" and not is_centered(self.values):
            raise PreconditionError("panel columns must be centered (mean zero)")


def center(panel: DataPanel) -> DataPanel:
    values = panel.values - column_means(panel.values)
    return DataPanel(values, "centered", panel.series_ids)


def standardize(panel: DataPanel) -> DataPanel:
    """Shift each column to mean 0 and scale it to unit sample standard deviation.

    Fails atomically with :class:`ZeroVarianceError` naming the first
    constant column.
    """
    values = panel.values
    if values.shape[0] < 2:
        raise DegenerateSampleError("standardize needs d >= 2")
    centered = values - column_means(values)
    var = np.einsum("ij,ij->j", centered, centered) / (values.shape[0] - 1)
    scale = np.max(np.abs(values), axis=0)
    # relative test: rounding leaves ~1e-32 * scale^2 on constant columns
    zero = np.flatnonzero(var <= (1e-13 * scale) ** 2)
    if zero.size:
        raise ZeroVarianceError(int(zero[0]))
    out = centered / np.sqrt(var)
    # one refinement pass keeps mean and std inside the invariant tolerances
    out = out - column_means(out)
    out = out / np.sqrt(np.einsum("ij,ij->j", out, out) / (values.shape[0] - 1))
    return DataPanel(out, "standardized", panel.series_ids)


def panel_from_columns(columns: Sequence[Sequence[float]], preprocessing: str = "raw") -> DataPanel:
    return DataPanel(np.column_stack([np.asarray(c, dtype=np.float64) for c in columns]), preprocessing)

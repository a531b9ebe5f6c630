"""Random projection matrices ``B`` (k x d) and their normalisation constants.

Six families are supported.  Four have i.i.d. elements and are described by
their element variance ``c2`` and excess kurtosis ``b4``; the two normalised
Gaussian families rescale columns or rows of a Gaussian draw to unit length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NotElementIIDError

FAMILIES = (
    "gaussian",
    "coin_flip",
    "sparse_achlioptas",
    "column_normalized_gaussian",
    "row_normalized_gaussian",
    "uniform",
)
IID_FAMILIES = ("gaussian", "coin_flip", "sparse_achlioptas", "uniform")
NORMALIZED_FAMILIES = ("column_normalized_gaussian", "row_normalized_gaussian")

SEED_MAX = 2**64 - 1


def check_family(family: str) -> str:
    if family not in FAMILIES:
        raise ValueError(f"unknown projection family {family!r}; expected one of {', '.join(FAMILIES)}")
    return family


@dataclass(frozen=True)
class ProjectionSpec:
    """Family, shape ``(k, d)`` and seed of one projection matrix.

    The same spec always regenerates the bit-identical matrix.
    """

    family: str
    k: int
    d: int
    seed: int = 0

    def __post_init__(self):
        check_family(self.family)
        if int(self.k) != self.k or self.k < 1:
            raise DimensionError(f"k must be a positive integer, got {self.k}")
        # d = 1 only arises for random loadings on a single-series panel
        if int(self.d) != self.d or self.d < 1:
            raise DimensionError(f"d must be a positive integer, got {self.d}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= SEED_MAX:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "seed", int(self.seed))

    def with_seed(self, seed: int) -> "ProjectionSpec":
        return ProjectionSpec(self.family, self.k, self.d, seed)


@dataclass(frozen=True)
class DistributionMoments:
    c2: float
    b4: float

    @property
    def fourth_moment(self) -> float:
        return self.c2**2 * (3.0 + self.b4)


_MOMENTS = {
    "gaussian": DistributionMoments(1.0, 0.0),
    "coin_flip": DistributionMoments(1.0, -2.0),
    # E[B^2] = 1/3, E[B^4] = 1/3 -> c4 = 1/3 - 3/9 = 0
    "sparse_achlioptas": DistributionMoments(1.0 / 3.0, 0.0),
    # E[B^2] = 1/3, E[B^4] = 1/5 -> b4 = (1/5)/(1/9) - 3
    "uniform": DistributionMoments(1.0 / 3.0, -6.0 / 5.0),
}


def distribution_moments(family: str) -> DistributionMoments:
    """Element variance and excess kurtosis of an i.i.d. family."""
    check_family(family)
    if family not in _MOMENTS:
        raise NotElementIIDError(f"{family} elements are not i.i.d.; no (c2, b4) description")
    return _MOMENTS[family]


def make_rng(seed, *stream) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional stream key.

    Streams with different keys are statistically independent
    (``SeedSequence`` spawn keys), so trial ``i`` of an ensemble can be
    regenerated on its own.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def draw_projection_batch(family: str, k: int, d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` independent ``k x d`` matrices, returned as an ``(n, k, d)`` array."""
    check_family(family)
    shape = (n, k, d)
    if family in ("gaussian", "column_normalized_gaussian", "row_normalized_gaussian"):
        B = rng.standard_normal(shape)
        if family == "column_normalized_gaussian":
            B /= np.sqrt(np.einsum("tkd,tkd->td", B, B))[:, None, :]
        elif family == "row_normalized_gaussian":
            B /= np.sqrt(np.einsum("tkd,tkd->tk", B, B))[:, :, None]
        return B
    if family == "coin_flip":
        return rng.integers(0, 2, size=shape, dtype=np.int8).astype(np.float64) * 2.0 - 1.0
    if family == "sparse_achlioptas":
        r = rng.random(shape)
        B = np.zeros(shape)
        B[r < 1.0 / 6.0] = -1.0
        B[r >= 5.0 / 6.0] = 1.0
        return B
    return rng.uniform(-1.0, 1.0, size=shape)


def draw_projection(spec: ProjectionSpec) -> np.ndarray:
    """The ``k x d`` matrix determined by ``spec``."""
    return draw_projection_batch(spec.family, spec.k, spec.d, 1, make_rng(spec.seed))[0]


def covariance_scale(family: str, k: int, d: int) -> float:
    """Scale ``a`` with ``E[C(Pu, Pv)] = C(u, v)`` for zero-mean ``u, v``.

    i.i.d. families use ``1 / (c2 sqrt(k (d + k + b4 (1 - 1/d))))``, which is
    ``1/sqrt(k(k+d))`` for the Gaussian.  The normalised families use the
    exact constants for unit-length columns (uniform on the sphere in R^k)
    and unit-length rows (uniform on the sphere in R^d).
    """
    check_family(family)
    if k < 1 or d < 1:
        raise DimensionError("need k >= 1 and d >= 1")
    if family in _MOMENTS:
        m = _MOMENTS[family]
        return 1.0 / (m.c2 * math.sqrt(k * (d + k + m.b4 * (1.0 - 1.0 / d))))
    if family == "column_normalized_gaussian":
        # (B^T B)_mm = 1, off-diagonal entries have variance 1/k
        return 1.0 / math.sqrt(1.0 + (d * d - 2.0 * d + 2.0) / (k * d))
    return 1.0 / math.sqrt(k * ((d + 1.0) / (d * (d + 2.0)) + (k - 1.0) / (d * d)))


def mean_scale(family: str, k: int, d: int) -> float:
    """Scale ``a`` with ``E[P] = I`` (``P x`` unbiased, variance inflated)."""
    check_family(family)
    if family in _MOMENTS:
        return 1.0 / (_MOMENTS[family].c2 * k)
    if family == "column_normalized_gaussian":
        return 1.0
    return d / k


def expected_projection_factor(family: str, k: int, d: int, a: float) -> float:
    """``kappa`` with ``E[a B^T B] = kappa I``."""
    return a / mean_scale(family, k, d)


def factor_scale(d: int) -> float:
    """``a' = 1/sqrt(d)``: random factors are orthonormal in expectation."""
    if d < 1:
        raise DimensionError("d must be >= 1")
    return 1.0 / math.sqrt(d)


def resolve_scale(family: str, k: int, d: int, scale="covariance") -> float:
    """Turn a scale mode (``"covariance"``, ``"mean"``) or a number into ``a``."""
    if isinstance(scale, str):
        if scale == "covariance":
            return covariance_scale(family, k, d)
        if scale == "mean":
            return mean_scale(family, k, d)
        raise ValueError(f"unknown scale mode {scale!r}")
    a = float(scale)
    if not a > 0.0:
        raise ValueError("scale must be positive")
    return a

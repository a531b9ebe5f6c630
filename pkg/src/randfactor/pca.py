"""PCA baseline via the thin SVD of the centered data matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError, DimensionError, PreconditionError
from .stats import DataPanel


@dataclass(frozen=True)
class PcaDecomposition:
    """``X = P_L diag(s) P_R^T`` with ``r = min(d, N)`` components, ``s`` non-increasing."""

    left_vectors: np.ndarray  # d x r
    singular_values: np.ndarray  # r
    right_vectors: np.ndarray  # N x r

    @property
    def rank_bound(self) -> int:
        return self.singular_values.size

    def reconstruct(self, k: int | None = None) -> np.ndarray:
        F, L = pca_truncate(self, self.rank_bound if k is None else k)
        return F @ L.T


def pca_decompose(panel: DataPanel) -> PcaDecomposition:
    """Thin SVD of a centered panel.

    Signs are fixed so that the largest-magnitude entry of every right
    singular vector is positive.  Tied singular values keep LAPACK's order.
    """
    panel.require_centered()
    try:
        U, s, Vt = np.linalg.svd(panel.values, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"SVD did not converge: {exc}") from exc
    if not (np.all(np.isfinite(U)) and np.all(np.isfinite(s)) and np.all(np.isfinite(Vt))):
        raise DecompositionError("SVD returned non-finite values")
    V = Vt.T
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[idx, np.arange(V.shape[1])] < 0.0, -1.0, 1.0)
    return PcaDecomposition(U * signs, s, V * signs)


def pca_truncate(decomp: PcaDecomposition, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Factors ``P_L^(k) D^(k)`` (d x k) and loadings ``P_R^(k)`` (N x k)."""
    r = decomp.rank_bound
    if not 1 <= k <= r:
        raise DimensionError(f"k must be in [1, {r}], got {k}")
    F = decomp.left_vectors[:, :k] * decomp.singular_values[:k]
    return F, decomp.right_vectors[:, :k]


def remove_market_factor(panel: DataPanel, decomp: PcaDecomposition | None = None) -> DataPanel:
    """Subtract the first principal component from a centered panel."""
    decomp = pca_decompose(panel) if decomp is None else decomp
    F, L = pca_truncate(decomp, 1)
    reduced = panel.values - F @ L.T
    # a centered X has U[:, 0] orthogonal to ones whenever s[0] > 0
    scale = np.maximum(np.max(np.abs(panel.values), axis=0), np.finfo(float).tiny)
    if np.any(np.abs(reduced.mean(axis=0)) > 1e-9 * scale):
        raise PreconditionError("market-factor removal broke centering")
    reduced = reduced - reduced.mean(axis=0)
    return DataPanel(reduced, "centered", panel.series_ids)

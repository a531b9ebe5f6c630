"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def moment_batch(B, u, v, a, target, ms):
    """Per-trial statistics of ``Pu = a B^T B u`` and ``Pv`` for a batch of ``B``.

    Returns ``(C, mu, s2, at, dev2, fres)``: the sample covariance of
    ``Pu, Pv``; the mean and sample variance of ``Pu``; ``Pu`` at the
    indices ``ms``; ``sum_m (Pu_m - target_m)^2``; and
    ``sum_m B[0, m] (u_m - Pu_m)``.
    """
    d = B.shape[2]
    pu = a * np.matmul(np.matmul(B, u)[:, None, :], B)[:, 0, :]
    pv = a * np.matmul(np.matmul(B, v)[:, None, :], B)[:, 0, :]
    mu = pu.mean(axis=1)
    xu = pu - mu[:, None]
    xv = pv - pv.mean(axis=1)[:, None]
    c = np.einsum("tm,tm->t", xu, xv) / (d - 1)
    s2 = np.einsum("tm,tm->t", xu, xu) / (d - 1)
    dev = pu - target
    dev2 = np.einsum("tm,tm->t", dev, dev)
    fres = np.einsum("tm,tm->t", B[:, 0, :], u - pu)
    return c, mu, s2, np.ascontiguousarray(pu[:, ms]), dev2, fres


def gram_batch(B, kmax):
    k = min(B.shape[1], kmax)
    Bk = B[:, :k, :]
    G = np.matmul(Bk, Bk.transpose(0, 2, 1))
    iu = np.triu_indices(k, 1)
    return np.ascontiguousarray(np.diagonal(G, axis1=1, axis2=2)), np.ascontiguousarray(G[:, iu[0], iu[1]])

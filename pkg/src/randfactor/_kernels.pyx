# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-trial statistics for Monte Carlo runs over projection matrices.

Same contract as ``randfactor._fallback``; results agree to rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def moment_batch(const double[:, :, ::1] B, const double[::1] u, const double[::1] v,
                 double a, const double[::1] target, const cnp.intp_t[::1] ms):
    cdef Py_ssize_t n = B.shape[0], k = B.shape[1], d = B.shape[2], r = ms.shape[0]
    cdef Py_ssize_t t, j, m, i
    cdef double sy, sw, su, sv, mu_u, mu_v, cuv, cuu, dev, x, y_, fr
    out_c = np.empty(n)
    out_mu = np.empty(n)
    out_s2 = np.empty(n)
    out_dev2 = np.empty(n)
    out_fres = np.empty(n)
    out_at = np.empty((n, r))
    cdef double[::1] oc = out_c, omu = out_mu, os2 = out_s2, odev = out_dev2, ofr = out_fres
    cdef double[:, ::1] oat = out_at
    cdef double *y = <double *> malloc(k * sizeof(double))
    cdef double *w = <double *> malloc(k * sizeof(double))
    cdef double *pu = <double *> malloc(d * sizeof(double))
    cdef double *pv = <double *> malloc(d * sizeof(double))
    if y == NULL or w == NULL or pu == NULL or pv == NULL:
        free(y); free(w); free(pu); free(pv)
        raise MemoryError()
    try:
        with nogil:
            for t in range(n):
                for j in range(k):
                    sy = 0.0
                    sw = 0.0
                    for m in range(d):
                        sy = sy + B[t, j, m] * u[m]
                        sw = sw + B[t, j, m] * v[m]
                    y[j] = sy
                    w[j] = sw
                for m in range(d):
                    pu[m] = 0.0
                    pv[m] = 0.0
                for j in range(k):
                    sy = y[j]
                    sw = w[j]
                    for m in range(d):
                        pu[m] = pu[m] + B[t, j, m] * sy
                        pv[m] = pv[m] + B[t, j, m] * sw
                su = 0.0
                sv = 0.0
                for m in range(d):
                    pu[m] = a * pu[m]
                    pv[m] = a * pv[m]
                    su = su + pu[m]
                    sv = sv + pv[m]
                mu_u = su / d
                mu_v = sv / d
                cuv = 0.0
                cuu = 0.0
                dev = 0.0
                fr = 0.0
                for m in range(d):
                    x = pu[m] - mu_u
                    y_ = pv[m] - mu_v
                    cuv = cuv + x * y_
                    cuu = cuu + x * x
                    x = pu[m] - target[m]
                    dev = dev + x * x
                    fr = fr + B[t, 0, m] * (u[m] - pu[m])
                oc[t] = cuv / (d - 1)
                omu[t] = mu_u
                os2[t] = cuu / (d - 1)
                odev[t] = dev
                ofr[t] = fr
                for i in range(r):
                    oat[t, i] = pu[ms[i]]
    finally:
        free(y); free(w); free(pu); free(pv)
    return out_c, out_mu, out_s2, out_at, out_dev2, out_fres


cdef inline double _dot(const double* x, const double* y, Py_ssize_t d) noexcept nogil:
    # four accumulators break the add dependency chain
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t m = 0
    while m + 4 <= d:
        s0 += x[m] * y[m]
        s1 += x[m + 1] * y[m + 1]
        s2 += x[m + 2] * y[m + 2]
        s3 += x[m + 3] * y[m + 3]
        m += 4
    while m < d:
        s0 += x[m] * y[m]
        m += 1
    return (s0 + s1) + (s2 + s3)


def gram_batch(const double[:, :, ::1] B, Py_ssize_t kmax):
    cdef Py_ssize_t n = B.shape[0], d = B.shape[2]
    cdef Py_ssize_t k = min(B.shape[1], kmax)
    cdef Py_ssize_t t, i, j, p
    out_diag = np.empty((n, k))
    out_off = np.empty((n, k * (k - 1) // 2))
    cdef double[:, ::1] od = out_diag, oo = out_off
    if n == 0 or d == 0:
        out_diag[...] = 0.0
        out_off[...] = 0.0
        return out_diag, out_off
    with nogil:
        for t in range(n):
            p = 0
            for i in range(k):
                od[t, i] = _dot(&B[t, i, 0], &B[t, i, 0], d)
                for j in range(i + 1, k):
                    oo[t, p] = _dot(&B[t, i, 0], &B[t, j, 0], d)
                    p = p + 1
    return out_diag, out_off

"""Closed-form moments of ``P = a B^T B`` and a Monte Carlo validator for them.

For Gaussian ``B`` the first two moments of ``(Pu)_m``, the mean and the
exact variance of ``C(Pu, Pv)`` and the Chebyshev tail bound are available
in closed form.  The i.i.d. non-Gaussian families differ through ``c2`` and
the excess kurtosis ``b4``; the normalised families have their own exact
first moments (derived from the moments of uniform vectors on a sphere).
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DegenerateSampleError, DimensionError, PreconditionError
from .randproj import (
    IID_FAMILIES,
    ProjectionSpec,
    covariance_scale,
    distribution_moments,
    draw_projection_batch,
    expected_projection_factor,
    factor_scale,
    make_rng,
    resolve_scale,
)

Z_THRESHOLD = 4.0
JENSEN_Z = 2.0
DEFAULT_B_GRID = (0.05, 0.1, 0.2, 0.5)
REPORT_COLUMNS = ("quantity", "closed_form", "estimate", "std_error", "z", "verdict")


def _centered_pair(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or u.shape != v.shape:
        raise DimensionError("u and v must be vectors of equal length")
    d = u.size
    if d < 2:
        raise DegenerateSampleError("need d >= 2")
    for name, x in (("u", u), ("v", v)):
        scale = max(float(np.max(np.abs(x))), np.finfo(float).tiny)
        if abs(float(x.mean())) > 1e-12 * scale:
            raise PreconditionError(f"{name} must have zero mean")
    return u, v


def var_c_exact(uu: float, vv: float, uv: float, d: int, k: int, a: float) -> float:
    """Exact ``Var(C(Pu, Pv))`` for Gaussian ``B`` and zero-mean ``u, v``.

    ``uu = |u|^2``, ``vv = |v|^2``, ``uv = u.v``.
    """
    p1 = 4 * k * k + d * d + 5 * d * k + 5 * k + 3 * d + 6
    p2 = 4 * k * k + d * d + 5 * d * k + 15 * k + 9 * d + 10
    return a**4 / (d - 1) ** 2 * k * (p1 * uu * vv + p2 * uv * uv)


def var_c_bound(sigma_u: float, sigma_v: float, d: int, k: int, a: float) -> float:
    """``8 a^4 k (k+d)^2 sigma_u^2 sigma_v^2``; proven for ``d >= 4`` (NaN below)."""
    if d < 4:
        return math.nan
    return 8.0 * a**4 * k * (k + d) ** 2 * sigma_u**2 * sigma_v**2


def chebyshev_tail(sigma_u: float, sigma_v: float, k: int, b: float) -> float:
    """``min(1, 8 sigma_u^2 sigma_v^2 / (k b^2))`` bound on ``P[|C(Pu,Pv) - C(u,v)| >= b]``."""
    if not b > 0.0:
        raise ValueError("b must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    return min(1.0, 8.0 * sigma_u**2 * sigma_v**2 / (k * b * b))


def relative_tail_bound(k: int, eps: float) -> float:
    """Tail bound with ``b = eps sigma_u sigma_v``: ``min(1, 8 / (k eps^2))``."""
    return chebyshev_tail(1.0, 1.0, k, eps)


@dataclass(frozen=True)
class MomentPrediction:
    mean_pu: np.ndarray
    var_pu: np.ndarray
    mean_c: float
    var_c_exact: float
    var_c_bound: float
    sigma_u: float
    sigma_v: float
    k: int

    def tail_bound(self, b: float) -> float:
        return chebyshev_tail(self.sigma_u, self.sigma_v, self.k, b)


def predict_moments(u, v, k: int, a: float) -> MomentPrediction:
    """Gaussian-``B`` predictions for zero-mean ``u, v``."""
    u, v = _centered_pair(u, v)
    d = u.size
    uu, vv, uv = float(u @ u), float(v @ v), float(u @ v)
    c_uv = uv / (d - 1)
    su, sv = math.sqrt(uu / (d - 1)), math.sqrt(vv / (d - 1))
    return MomentPrediction(
        mean_pu=a * k * u,
        var_pu=a * a * k * (u * u + uu),
        mean_c=a * a * k * (d + k) * c_uv,
        var_c_exact=var_c_exact(uu, vv, uv, d, k, a),
        var_c_bound=var_c_bound(su, sv, d, k, a),
        sigma_u=su,
        sigma_v=sv,
        k=k,
    )


@dataclass(frozen=True)
class NonGaussianPrediction:
    mean_pu: np.ndarray
    var_pu: np.ndarray
    mean_c: float
    preserving_scale: float


def nongaussian_predictions(u, v, k: int, a: float, c2: float, b4: float) -> NonGaussianPrediction:
    """First moments for i.i.d. elements with variance ``c2`` and excess kurtosis ``b4``."""
    u, v = _centered_pair(u, v)
    d = u.size
    uu = float(u @ u)
    c_uv = float(u @ v) / (d - 1)
    shape = d + k + b4 * (1.0 - 1.0 / d)
    return NonGaussianPrediction(
        mean_pu=c2 * a * k * u,
        var_pu=c2 * c2 * a * a * k * (uu + (1.0 + b4) * u * u),
        mean_c=c2 * c2 * a * a * k * shape * c_uv,
        preserving_scale=1.0 / (c2 * math.sqrt(k * shape)),
    )


@dataclass(frozen=True)
class FamilyPrediction:
    """Predictions for any family; ``var_c`` is exact only when ``var_c_is_exact``."""

    mean_pu: np.ndarray
    var_pu: np.ndarray
    mean_c: float
    var_c: float
    var_c_bound: float
    var_c_is_exact: bool
    effective_gaussian_scale: float


def family_predictions(family: str, u, v, k: int, a: float) -> FamilyPrediction:
    u, v = _centered_pair(u, v)
    d = u.size
    uu = float(u @ u)
    c_uv = float(u @ v) / (d - 1)
    if family == "gaussian":
        g = predict_moments(u, v, k, a)
        return FamilyPrediction(g.mean_pu, g.var_pu, g.mean_c, g.var_c_exact, g.var_c_bound, True, a)
    kappa = expected_projection_factor(family, k, d, a)
    if family in IID_FAMILIES:
        m = distribution_moments(family)
        ng = nongaussian_predictions(u, v, k, a, m.c2, m.b4)
        mean_pu, var_pu, mean_c = ng.mean_pu, ng.var_pu, ng.mean_c
        a_eff = a * m.c2
    elif family == "column_normalized_gaussian":
        mean_pu = kappa * u
        var_pu = a * a * (uu - u * u) / k
        mean_c = a * a * (1.0 + (d * d - 2.0 * d + 2.0) / (k * d)) * c_uv
        a_eff = a / k
    else:
        mean_pu = kappa * u
        var_pu = a * a * k * ((uu + 2.0 * u * u) / (d * (d + 2.0)) - u * u / (d * d))
        mean_c = a * a * k * ((d + 1.0) / (d * (d + 2.0)) + (k - 1.0) / (d * d)) * c_uv
        a_eff = a / d
    g = predict_moments(u, v, k, a_eff)
    return FamilyPrediction(mean_pu, var_pu, mean_c, g.var_c_exact, g.var_c_bound, False, a_eff)


def gram_predictions(family: str, k: int, d: int, a_prime: float) -> tuple[float, float, float, float]:
    """Exact ``(diag mean, diag var, off mean, off var)`` of ``sum_m F_mj F_mj'`` with ``F = a' B^T``."""
    s2, s4 = a_prime**2, a_prime**4
    if family in IID_FAMILIES:
        m = distribution_moments(family)
        return s2 * d * m.c2, s4 * d * m.c2**2 * (2.0 + m.b4), 0.0, s4 * d * m.c2**2
    if family == "column_normalized_gaussian":
        return s2 * d / k, s4 * 2.0 * d * (k - 1.0) / (k * k * (k + 2.0)), 0.0, s4 * d / (k * (k + 2.0))
    return s2, 0.0, 0.0, s4 / d


@dataclass(frozen=True)
class ReportRow:
    quantity: str
    closed_form: float
    estimate: float
    std_error: float
    z: float
    verdict: str
    severity: str = "fail"  # "fail" rows decide the overall outcome, "warn" rows only inform


def _z(estimate: float, closed: float, se: float, atol: float = 0.0) -> float:
    diff = estimate - closed
    if abs(diff) <= max(atol, 1e-13 * abs(closed)):
        # agreement at rounding level; also covers degenerate (constant) quantities
        return 0.0
    if se > 0.0 and math.isfinite(se):
        return diff / se
    return math.copysign(math.inf, diff)


def moment_row(name, closed, estimate, se, severity="fail", threshold=Z_THRESHOLD, atol=0.0) -> ReportRow:
    z = _z(estimate, closed, se, atol)
    ok = abs(z) <= threshold
    return ReportRow(name, closed, estimate, se, z, _verdict(ok, severity), severity)


def bound_row(name, bound, estimate, se, severity="fail", threshold=Z_THRESHOLD) -> ReportRow:
    """One-sided: passes when ``estimate <= bound + threshold * se``."""
    z = _z(estimate, bound, se)
    ok = z <= threshold
    return ReportRow(name, bound, estimate, se, z, _verdict(ok, severity), severity)


def _verdict(ok: bool, severity: str) -> str:
    if ok:
        return "PASS"
    return "FAIL" if severity == "fail" else "WARN"


def mean_and_se(x: np.ndarray) -> tuple[float, float]:
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def var_and_se(x: np.ndarray) -> tuple[float, float]:
    """Sample variance and its standard error from the fourth central moment."""
    n = x.size
    dev = x - x.mean()
    s2 = float(dev @ dev / (n - 1))
    m4 = float(np.mean(dev**4))
    return s2, math.sqrt(max(m4 - s2 * s2, 0.0) / n)


@dataclass
class TheoryReport:
    rows: list[ReportRow]
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.verdict == "PASS" for r in self.rows if r.severity == "fail")

    def row(self, quantity: str) -> ReportRow:
        for r in self.rows:
            if r.quantity == quantity:
                return r
        raise KeyError(quantity)

    def failures(self) -> list[ReportRow]:
        return [r for r in self.rows if r.verdict == "FAIL"]

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow([r.quantity, repr(float(r.closed_form)), repr(float(r.estimate)),
                        repr(float(r.std_error)), repr(float(r.z)), r.verdict])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def chunk_trials(k: int, d: int, cap: int = 4096) -> int:
    """Trials per chunk; keeps one chunk of ``B`` under ~16 MB."""
    return max(1, min(cap, (1 << 21) // (k * d)))


@dataclass
class MonteCarloSample:
    """Per-trial statistics collected by :func:`simulate`."""

    c: np.ndarray
    mu: np.ndarray
    s2: np.ndarray
    at: np.ndarray
    dev2: np.ndarray
    fres: np.ndarray
    gram_diag: np.ndarray
    gram_off: np.ndarray
    ms: np.ndarray


def simulate(u, v, spec: ProjectionSpec, trials: int, a: float, target=None,
             ms=None, workers: int = 1, gram_factors: int = 8) -> MonteCarloSample:
    """Draw ``trials`` matrices and record per-trial statistics.

    Chunk ``c`` uses the stream ``(spec.seed, c)``, and chunks are merged in
    order, so the output does not depend on ``workers``.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    d = u.size
    if spec.d != d:
        raise DimensionError(f"spec has d={spec.d} but vectors have length {d}")
    target = np.zeros(d) if target is None else np.ascontiguousarray(target, dtype=np.float64)
    ms = np.zeros(0, dtype=np.intp) if ms is None else np.ascontiguousarray(ms, dtype=np.intp)
    size = chunk_trials(spec.k, d)
    chunks = [(c, min(size, trials - start)) for c, start in enumerate(range(0, trials, size))]

    def run(job):
        c, n = job
        B = draw_projection_batch(spec.family, spec.k, d, n, make_rng(spec.seed, c))
        return _backend.moment_batch(B, u, v, a, target, ms) + _backend.gram_batch(B, gram_factors)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, chunks))
    else:
        parts = [run(job) for job in chunks]
    cols = [np.concatenate([p[i] for p in parts]) for i in range(8)]
    return MonteCarloSample(*cols, ms=ms)


def monte_carlo_validate(u, v, spec: ProjectionSpec, trials: int, scale="covariance",
                         b_grid=DEFAULT_B_GRID, workers: int = 1, a_prime: float | None = None) -> TheoryReport:
    """Compare Monte Carlo estimates against the closed forms.

    Moment rows pass when ``|z| <= 4``; bound rows pass when the estimate
    does not exceed the bound by more than 4 standard errors.  Rows with
    severity ``warn`` (non-Gaussian ``Var(C)`` against the Gaussian form,
    and the ``2 sigma_u^2 sigma_v^2 / k`` large-``d`` approximation) never
    fail the report.  ``b_grid`` is in units of ``sigma_u sigma_v``.
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    u, v = _centered_pair(u, v)
    d, k, family = u.size, spec.k, spec.family
    a = resolve_scale(family, k, d, scale)
    preserving = math.isclose(a, covariance_scale(family, k, d), rel_tol=1e-12)
    gaussian = family == "gaussian"
    pred = family_predictions(family, u, v, k, a)
    ap = factor_scale(d) if a_prime is None else float(a_prime)
    ms = np.unique(np.array([0, int(np.argmax(np.abs(u))), d - 1], dtype=np.intp))
    sample = simulate(u, v, spec, trials, a, target=pred.mean_pu, ms=ms, workers=workers)

    c_uv = float(u @ v) / (d - 1)
    var_u = float(u @ u) / (d - 1)
    su, sv = math.sqrt(var_u), math.sqrt(float(v @ v) / (d - 1))
    rows: list[ReportRow] = []
    for i, m in enumerate(ms):
        x = sample.at[:, i]
        est, se = mean_and_se(x)
        rows.append(moment_row(f"mean_Pu[m={m + 1}]", float(pred.mean_pu[m]), est, se))
        est, se = var_and_se(x)
        rows.append(moment_row(f"var_Pu[m={m + 1}]", float(pred.var_pu[m]), est, se))
    est, se = mean_and_se(sample.dev2 / d)
    rows.append(moment_row("var_Pu_pooled", float(pred.var_pu.mean()), est, se))
    est, se = mean_and_se(sample.mu)
    rows.append(moment_row("mean_mu_Pu", 0.0, est, se))
    est, se = mean_and_se(sample.c)
    rows.append(moment_row("mean_C", pred.mean_c, est, se))
    rows.append(moment_row("cov_preservation", c_uv, est, se))
    est, se = mean_and_se(sample.s2)
    rows.append(moment_row("var_preservation", var_u, est, se))
    est, se = mean_and_se(np.sqrt(sample.s2))
    rows.append(bound_row("jensen_volatility", su, est, se, threshold=JENSEN_Z))

    var_hat, var_se = var_and_se(sample.c)
    exact_sev = "fail" if gaussian else "warn"
    rows.append(moment_row("var_C_exact", pred.var_c, var_hat, var_se, severity=exact_sev))
    if d >= 4:
        rows.append(bound_row("var_C_bound", pred.var_c_bound, var_hat, var_se, severity=exact_sev))
    if preserving:
        rows.append(bound_row("var_C_large_d", 2.0 * su * su * sv * sv / k, var_hat, var_se, severity="warn"))
    tail_sev = "fail" if gaussian and preserving and d >= 4 else "warn"
    err = np.abs(sample.c - c_uv)
    for b in b_grid:
        babs = b * su * sv
        p = float(np.mean(err >= babs))
        rows.append(bound_row(f"tail[b={b:g}]", chebyshev_tail(su, sv, k, babs), p,
                              math.sqrt(p * (1.0 - p) / trials), severity=tail_sev))

    from .rfm import gram_stats_from_entries

    g = gram_stats_from_entries(ap * ap * sample.gram_diag, ap * ap * sample.gram_off)
    gd_mean, gd_var, go_mean, go_var = gram_predictions(family, k, d, ap)
    rows.append(moment_row("gram_diag_mean", gd_mean, g.diag_mean, g.diag_mean_se))
    rows.append(moment_row("gram_diag_var", gd_var, g.diag_var, g.diag_var_se, atol=1e-12 * gd_mean**2))
    if k >= 2:
        rows.append(moment_row("gram_off_mean", go_mean, g.off_mean, g.off_mean_se))
        rows.append(moment_row("gram_off_var", go_var, g.off_var, g.off_var_se))
    est, se = mean_and_se(ap * sample.fres)
    rows.append(moment_row("factor_residual_orthogonality", 0.0, est, se))

    meta = {"family": family, "k": k, "d": d, "a": a, "a_prime": ap, "trials": trials,
            "seed": spec.seed, "backend": _backend.BACKEND}
    return TheoryReport(rows, meta)

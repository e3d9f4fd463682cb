"""Residual checks of a computed (p, q) against the original boundary system.

Every check consumes a *field*: an object with ``p_at(r, theta, dr, dtheta)``
(tensor grid r x theta), ``q_at(r, deriv)``, ``f_at(r)`` and the constants
``kappa1``, ``kappa2``.  :func:`as_field` adapts a :class:`SolutionBundle`;
:class:`PolynomialPair` is the closed-form polynomial solution and
:class:`CallableField` wraps a bare p(r, theta) for stencil tests.

Traces on the slit use p_x2 = -(1/r) p_theta at theta = +-pi, and on the slit
d/dx1 = -d/dr.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import GridTooCoarse, InsufficientRange
from .mellin import NormParams, SpectralFunction, VerticalLine, half_norm_spectral
from .solver import SolutionBundle, SolverParams, q_tilde_line
from .sources import SourceTerm

LAPLACE_TOL = 1e-4
TRACE_TOL = 1e-6
ODE_TOL = 1e-4
ORDER_MIN = 1.8
AUDIT_FACTOR = 10.0
DECAY_FRACTION = 0.01
NORM_TAIL_MAX = 0.05
# bound on the a priori norm ratio over the built-in source family, fixed at
# first release from the five-source sweep (max observed 3.75) with 1/3 headroom
NORM_RATIO_BOUND = 5.0


@dataclass
class ResidualReport:
    """Outcome of one residual check.

    ``rel`` is dimensionless (residual over the local magnitude of the terms
    entering the equation); ``order`` is the observed convergence order
    between two step sizes when the check is stencil based.
    """

    name: str
    max_abs: float
    rel: float
    tol: float | None = None
    h: float | None = None
    order: float | None = None
    passed: bool | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed is None and self.tol is not None:
            self.passed = bool(self.rel <= self.tol)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def line(self) -> str:
        status = {True: "PASS", False: "FAIL", None: "info"}[self.passed]
        order = "" if self.order is None else f"  order {self.order:5.2f}"
        tol = "" if self.tol is None else f"  tol {self.tol:.1e}"
        return f"{status:4s}  {self.name:28s} abs {self.max_abs:10.3e}  rel {self.rel:10.3e}{tol}{order}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True)


def summary_table(reports) -> str:
    return "\n".join(r.line() for r in reports)


# ---------------------------------------------------------------------------
# fields

class _BundleField:
    def __init__(self, bundle: SolutionBundle):
        self.bundle = bundle
        self.kappa1 = bundle.params.kappa1
        self.kappa2 = bundle.params.kappa2

    def p_at(self, r, theta, dr=0, dtheta=0):
        return self.bundle.p_at(r, theta, dr=dr, dtheta=dtheta)

    def q_at(self, r, deriv=0):
        return self.bundle.q_at(r, deriv)

    def f_at(self, r):
        return np.asarray(self.bundle.source(np.asarray(r, dtype=float)), dtype=float)


def as_field(obj):
    """Adapt a SolutionBundle (other field objects pass through)."""
    return _BundleField(obj) if isinstance(obj, SolutionBundle) else obj


class CallableField:
    """p(r, theta) given as a vectorized callable; only values, no derivatives."""

    def __init__(self, p: Callable, kappa1: float = 1.0, kappa2: float = 1.0):
        self._p = p
        self.kappa1, self.kappa2 = kappa1, kappa2

    def p_at(self, r, theta, dr=0, dtheta=0):
        if dr or dtheta:
            raise NotImplementedError("CallableField supplies values only")
        R, T = np.meshgrid(np.atleast_1d(r), np.atleast_1d(theta), indexing="ij")
        return np.asarray(self._p(R, T), dtype=float)


class PerturbedField:
    """Field with constant offsets added to q and/or p (fault injection)."""

    def __init__(self, base, q_offset: float = 0.0, p_offset: float = 0.0):
        self.base = as_field(base)
        self.q_offset, self.p_offset = q_offset, p_offset
        self.kappa1, self.kappa2 = self.base.kappa1, self.base.kappa2

    def p_at(self, r, theta, dr=0, dtheta=0):
        v = self.base.p_at(r, theta, dr, dtheta)
        return v + self.p_offset if dr == dtheta == 0 else v

    def q_at(self, r, deriv=0):
        v = self.base.q_at(r, deriv)
        return v + self.q_offset if deriv == 0 else v

    def f_at(self, r):
        return self.base.f_at(r)


class PolynomialPair:
    """Exact solution for a polynomial datum f^(x1) = sum f_k x1^k.

    q^(x1) = q0 + q1 x1 - sum f_k x1^(k+2) / ((k+2)(k+1)) and p^ = Re P(z) with
    the same polynomial P evaluated at z = x1 + i x2.  ``p_shift`` adds a
    multiple of z^(m+2) to p only, which breaks the pair.
    """

    def __init__(self, f_coef, q0: float = 0.0, q1: float = 0.0,
                 kappa1: float = 1.0, kappa2: float = 1.0, p_shift: float = 0.0):
        f_coef = np.asarray(f_coef, dtype=float)
        m = f_coef.size - 1
        c = np.zeros(m + 3)
        c[0], c[1] = q0, q1
        c[2:] = -f_coef / ((np.arange(m + 1) + 2.0) * (np.arange(m + 1) + 1.0))
        self.f_coef = f_coef
        self.q_poly = np.polynomial.Polynomial(c)
        cp = c.copy()
        cp[-1] += p_shift
        self.p_coef = cp
        self.kappa1, self.kappa2 = kappa1, kappa2

    def p_at(self, r, theta, dr=0, dtheta=0):
        """d_r^a d_theta^b Re z^n = Re((i n)^b n(n-1)..(n-a+1) z^n) / r^a."""
        r = np.atleast_1d(np.asarray(r, dtype=float))[:, None]
        th = np.atleast_1d(np.asarray(theta, dtype=float))[None, :]
        z = r * np.exp(1j * th)
        out = np.zeros(np.broadcast(r, th).shape, dtype=complex)
        for n, cn in enumerate(self.p_coef):
            if cn == 0:
                continue
            fall = math.prod(range(n - dr + 1, n + 1)) if dr <= n else 0
            if fall == 0:
                continue
            out += cn * (1j * n) ** dtheta * fall * z ** n
        return np.real(out) / r ** dr

    def q_at(self, r, deriv=0):
        x1 = -np.atleast_1d(np.asarray(r, dtype=float))
        return (-1.0) ** deriv * self.q_poly.deriv(deriv)(x1) if deriv else self.q_poly(x1)

    def f_at(self, r):
        return np.polynomial.Polynomial(self.f_coef)(-np.atleast_1d(np.asarray(r, dtype=float)))


# ---------------------------------------------------------------------------
# Laplace

def _stencil_laplace(field, r, theta, h):
    """(residual, |p_uu| + |p_tt|) of p_uu + p_tt with u = log r, step h."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    offs = np.array([-h, 0.0, h])
    rr = (r[:, None] * np.exp(offs)[None, :]).ravel()
    tt = (theta[:, None] + offs[None, :]).ravel()
    v = field.p_at(rr, tt).reshape(r.size, 3, theta.size, 3)
    c = v[:, 1, :, 1]
    p_uu = (v[:, 2, :, 1] - 2 * c + v[:, 0, :, 1]) / h ** 2
    p_tt = (v[:, 1, :, 2] - 2 * c + v[:, 1, :, 0]) / h ** 2
    return p_uu + p_tt, np.abs(p_uu) + np.abs(p_tt)


def laplace_residual(field, r=None, theta=None, h: float = 0.01, method: str = "stencil",
                     tol: float = LAPLACE_TOL) -> ResidualReport:
    """Residual of p_rr + p_r/r + p_tt/r^2 = 0.

    ``method="stencil"`` uses the second-order 5-point stencil in (log r, theta)
    at steps h and h/2 and reports the observed order; ``method="exact"`` uses
    the field's own derivatives.  ``max_abs`` is the physical Laplacian, ``rel``
    is r^2 * Laplacian over the magnitude of the two second-derivative terms.
    """
    field = as_field(field)
    r = np.logspace(-2, 2, 9) if r is None else np.atleast_1d(np.asarray(r, dtype=float))
    theta = (np.linspace(-0.9 * np.pi, 0.9 * np.pi, 7) if theta is None
             else np.atleast_1d(np.asarray(theta, dtype=float)))
    if method == "exact":
        rc = r[:, None]
        prr = field.p_at(r, theta, dr=2)
        pr = field.p_at(r, theta, dr=1)
        ptt = field.p_at(r, theta, dtheta=2)
        res = rc ** 2 * prr + rc * pr + ptt
        scale = np.abs(rc ** 2 * prr) + np.abs(rc * pr) + np.abs(ptt)
        lap = res / rc ** 2
        rel = float(np.max(np.abs(res)) / max(np.max(scale), 1e-300)) if np.any(scale) else 0.0
        return ResidualReport("laplace", float(np.max(np.abs(lap))), rel, tol,
                              details={"method": "exact", "n_points": int(res.size)})
    if method != "stencil":
        raise ValueError(f"unknown method {method!r}")
    if r.size * theta.size < 1:
        raise GridTooCoarse("no test points")
    if h <= 0 or h > 0.25:
        raise GridTooCoarse(f"stencil step {h} outside (0, 0.25]")
    res_c, scale_c = _stencil_laplace(field, r, theta, h)
    res_f, scale_f = _stencil_laplace(field, r, theta, h / 2)
    lap = res_f / r[:, None] ** 2
    scale = max(float(np.max(scale_f)), 1e-300)
    rel_f = float(np.max(np.abs(res_f)) / scale) if np.any(scale_f) else 0.0
    rel_c = float(np.max(np.abs(res_c)) / scale) if np.any(scale_f) else 0.0
    order = math.log2(rel_c / rel_f) if rel_f > 0 and rel_c > 0 else float("nan")
    passed = rel_f <= tol and (rel_f < 1e-12 or (math.isfinite(order) and order >= ORDER_MIN))
    return ResidualReport("laplace", float(np.max(np.abs(lap))), rel_f, tol, h=h / 2,
                          order=order, passed=bool(passed),
                          details={"method": "stencil", "rel_coarse": rel_c, "h_coarse": h,
                                   "order_min": ORDER_MIN, "n_points": int(res_f.size)})


# ---------------------------------------------------------------------------
# slit conditions

def _slit_r(r):
    return np.logspace(-2, 2, 81) if r is None else np.atleast_1d(np.asarray(r, dtype=float))


def _traces(field, r):
    pv = field.p_at(r, [np.pi, -np.pi])
    pt = field.p_at(r, [np.pi, -np.pi], dtheta=1)
    return pv[:, 0], pv[:, 1], pt[:, 0], pt[:, 1]


def bc_residuals(field, r=None, tol: float = TRACE_TOL) -> ResidualReport:
    """Slit conditions +-kappa1/(2r)[p_t(pi) + p_t(-pi)] + p(+-pi) - q = 0.

    Reported raw (trace equality p(+-pi) = q) and kappa1-weighted.
    """
    field = as_field(field)
    r = _slit_r(r)
    pp, pm, tp, tm = _traces(field, r)
    q = field.q_at(r)
    raw = np.maximum(np.abs(pp - q), np.abs(pm - q))
    flux = field.kappa1 / (2 * r) * (tp + tm)
    full = np.maximum(np.abs(flux + pp - q), np.abs(-flux + pm - q))
    scale = max(float(np.max(np.abs(q))), float(np.max(np.abs(pp))), 1e-300)
    mx = float(np.max(full))
    rel = mx / scale if mx > 0 else 0.0
    return ResidualReport("trace_equality", mx, rel, tol,
                          details={"raw_max_abs": float(np.max(raw)),
                                   "raw_rel": float(np.max(raw)) / scale if np.max(raw) > 0 else 0.0,
                                   "flux_sum_max": float(np.max(np.abs(tp + tm))),
                                   "r_range": [float(r[0]), float(r[-1])]})


def _ode_parts(field, r):
    _, _, tp, tm = _traces(field, r)
    qrr = field.q_at(r, 2)
    f = field.f_at(r)
    coupling = field.kappa2 / r * (tp - tm)
    return qrr, f, coupling


def ode_residual(field, r=None, tol: float = ODE_TOL, sign_audit: bool = False) -> ResidualReport:
    """Radial equation -q_rr = f - (kappa2/r)(p_t(r, pi) - p_t(r, -pi)).

    With ``sign_audit`` the residual is also formed with the coupling sign
    flipped and the report names the sign with the smaller residual.
    """
    field = as_field(field)
    r = _slit_r(r)
    qrr, f, coupling = _ode_parts(field, r)
    scale = max(float(np.max(np.abs(qrr))), float(np.max(np.abs(f))),
                float(np.max(np.abs(coupling))), 1e-300)

    def rel_of(sign):
        res = -qrr - f + sign * coupling
        mx = float(np.max(np.abs(res)))
        return mx, (mx / scale if mx > 0 else 0.0), res

    mx, rel, res = rel_of(+1.0)
    details = {"r_range": [float(r[0]), float(r[-1])],
               "max_abs_coupling": float(np.max(np.abs(coupling))),
               "max_abs_f": float(np.max(np.abs(f)))}
    nz = np.abs(res) > 0
    if nz.sum() >= 3:
        # power-law shape of the residual (diagnoses a missing r^a mode)
        slope, icpt = np.polyfit(np.log(r[nz]), np.log(np.abs(res[nz])), 1)
        details["residual_loglog_slope"] = float(slope)
        details["residual_prefactor"] = float(math.exp(icpt))
    passed = rel <= tol
    if sign_audit:
        mx_m, rel_m, _ = rel_of(-1.0)
        best = "+" if rel <= rel_m else "-"
        lo, hi = sorted([rel, rel_m])
        ratio = hi / lo if lo > 0 else float("inf")
        details.update({"audit_rel_plus": rel, "audit_rel_minus": rel_m,
                        "audit_minimizer": best, "audit_ratio": ratio,
                        "audit_discriminates": bool(ratio >= AUDIT_FACTOR)})
        passed = passed and ratio >= AUDIT_FACTOR and best == "+"
    return ResidualReport("ode_coupling", mx, rel, tol, passed=bool(passed), details=details)


def venttsel_residuals(field, r=None, r_tip=(1e-3, 1e-2), tol: float = TRACE_TOL):
    """Conditions with q eliminated.

    (i)   -k1 p+_x2 + p+ = k1 p-_x2 + p-,
    (ii)  -(1/2)(p+_x1x1 + p-_x1x1) = f + k2 (p+_x2 - p-_x2)   (sum of the two
          trace conditions substituted into the radial equation),
    (iii) p+_x1(0) = -p-_x1(0), checked as the limit r -> 0 of the sum.
    """
    field = as_field(field)
    r = _slit_r(r)
    pp, pm, tp, tm = _traces(field, r)
    k1, k2 = field.kappa1, field.kappa2
    nx_p, nx_m = -tp / r, -tm / r
    res1 = -k1 * nx_p + pp - k1 * nx_m - pm
    s1 = max(float(np.max(np.abs(pp))), float(np.max(np.abs(k1 * nx_p))), 1e-300)
    m1 = float(np.max(np.abs(res1)))
    rep1 = ResidualReport("venttsel_jump", m1, m1 / s1 if m1 > 0 else 0.0, tol)

    prr = field.p_at(r, [np.pi, -np.pi], dr=2)
    f = field.f_at(r)
    res2 = -0.5 * (prr[:, 0] + prr[:, 1]) - f - k2 * (nx_p - nx_m)
    s2 = max(float(np.max(np.abs(prr))), float(np.max(np.abs(f))),
             float(np.max(np.abs(k2 * (nx_p - nx_m)))), 1e-300)
    m2 = float(np.max(np.abs(res2)))
    rep2 = ResidualReport("venttsel_second_order", m2, m2 / s2 if m2 > 0 else 0.0, ODE_TOL)

    rt = np.logspace(math.log10(r_tip[0]), math.log10(r_tip[1]), 20)
    pr = field.p_at(rt, [np.pi, -np.pi], dr=1)
    s = np.abs(pr[:, 0] + pr[:, 1])        # |p+_x1 + p-_x1|
    scale3 = max(float(np.max(np.abs(pr))), 1e-300)
    if np.all(s == 0):
        rep3 = ResidualReport("venttsel_tip", 0.0, 0.0, passed=True, details={"slope": None})
    else:
        slope = float(np.polyfit(np.log(rt), np.log(np.maximum(s, 1e-300)), 1)[0])
        rep3 = ResidualReport("venttsel_tip", float(s[0]), float(s[0]) / scale3,
                              passed=bool(slope > 0.1),
                              details={"slope": slope, "r_min": float(rt[0]),
                                       "criterion": "sum of slopes decays like r^a, a > 0.1"})
    return [rep1, rep2, rep3]


# ---------------------------------------------------------------------------
# tip and far field

def tip_and_decay_checks(field, params: SolverParams, r_tip=(1e-3, 1e-2), r_mid=(1e-1, 1e1),
                         r_far=(1e2, 1e3), slope_margin: float = 0.1,
                         decay_fraction: float = DECAY_FRACTION):
    """log-log slope of |q'| near the tip and smallness of q, p on the far decade."""
    field = as_field(field)
    for lo, hi in (r_tip, r_mid, r_far):
        if not 0 < lo < hi:
            raise InsufficientRange(f"empty radial range ({lo}, {hi})")
    if not (r_tip[1] <= r_mid[0] and r_mid[1] <= r_far[0]):
        raise InsufficientRange("ranges must be ordered tip < mid < far")
    target = params.alpha - 1.0 - slope_margin
    rt = np.logspace(math.log10(r_tip[0]), math.log10(r_tip[1]), 25)
    qp = np.abs(field.q_at(rt, 1))
    if np.all(qp == 0):
        tip = ResidualReport("tip_slope", 0.0, 0.0, passed=True,
                             details={"vacuous": True, "target": target})
    else:
        slope = float(np.polyfit(np.log(rt), np.log(np.maximum(qp, 1e-300)), 1)[0])
        tip = ResidualReport("tip_slope", float(qp[0]), float(qp[0]),
                             passed=bool(slope >= target),
                             details={"slope": slope, "target": target, "alpha": params.alpha,
                                      "r_range": list(r_tip)})
    th = np.linspace(-np.pi, np.pi, 33)
    rm = np.logspace(math.log10(r_mid[0]), math.log10(r_mid[1]), 25)
    rf = np.logspace(math.log10(r_far[0]), math.log10(r_far[1]), 25)
    mid = max(float(np.max(np.abs(field.q_at(rm)))), float(np.max(np.abs(field.p_at(rm, th)))))
    far_q = float(np.max(np.abs(field.q_at(rf))))
    far_p = float(np.max(np.abs(field.p_at(rf, th))))
    far = max(far_q, far_p)
    if mid == 0 and far == 0:
        decay = ResidualReport("far_field_decay", 0.0, 0.0, passed=True, details={"vacuous": True})
    else:
        ratio = far / mid if mid > 0 else float("inf")
        decay = ResidualReport("far_field_decay", far, ratio, decay_fraction,
                               details={"far_max_q": far_q, "far_max_p": far_p, "mid_max": mid,
                                        "r_far": list(r_far), "r_mid": list(r_mid)})
    return [tip, decay]


# ---------------------------------------------------------------------------
# a priori norm ratio

def _theta_ratio(lam, order):
    """sum_j<=order |lam|^2j int |d^j cos(lam t)|^2 dt / |cos(lam pi)|^2 over (-pi, pi)."""
    a, t = lam.real, lam.imag
    x = 2 * np.pi * np.abs(t)
    # divide numerator and denominator by cosh(2 pi t)
    sech = np.exp(-x) * 2.0 / (1.0 + np.exp(-2 * x))
    with np.errstate(invalid="ignore", divide="ignore"):
        th_t = np.where(np.abs(t) < 1e-12, 2 * np.pi, np.tanh(x) / np.maximum(np.abs(t), 1e-300))
    sa = np.sin(2 * np.pi * a) / a      # Re lam lies in (-1, -1/2), never 0
    den = 1.0 + np.cos(2 * np.pi * a) * sech
    ic = (th_t + sa * sech) / den
    is_ = (th_t - sa * sech) / den
    mag2 = np.abs(lam) ** 2
    total = np.zeros(t.shape)
    for j in range(order + 1):
        total = total + mag2 ** j * (ic if j % 2 == 0 else is_)
    return total


def _tail_fraction(line: VerticalLine, integrand):
    w = line.weights * integrand
    tot = float(np.sum(w))
    outer = np.abs(line.t) > 0.9 * line.im_max
    return float(np.sum(w[outer])) / tot if tot > 0 else 0.0


@dataclass
class NormReport:
    ratio: float
    p_domain: float
    p_trace: float
    q_trace: float
    f_norm: float
    tail_fractions: dict
    flags: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable(asdict(self))


def norm_estimate_report(f: SourceTerm, params: SolverParams,
                         n_nodes: int | None = None, im_max: float | None = None) -> NormReport:
    """LHS / RHS of the a priori estimate, all terms by spectral quadrature.

    ||p||_{k+3,mu} uses the polar form with p~ = q~ cos(lam t)/cos(lam pi) on
    Re lam = mu - k - 2 and includes the Parseval factor 1/(2 pi), so it equals
    the physical-side norm.  Trace norms use the half-norm weight (1 + |s|)^(2m+1);
    ||p||_Sigma = sqrt(2) ||q||_Sigma because both traces equal q.
    """
    pr = replace(params, **{k: v for k, v in (("n_nodes", n_nodes), ("im_max", im_max))
                            if v is not None})
    k, mu = pr.k, pr.mu
    line_re = mu - k - 2
    fl = VerticalLine(mu - k, pr.im_max, pr.n_nodes, "trapezoid")
    fv = f.mellin(fl.points)
    fs = SpectralFunction(fl, fv, f.strip)
    np_half = NormParams(k, mu)
    f_norm = half_norm_spectral(fs, np_half)
    flags = []
    if f_norm == 0:
        return NormReport(0.0, 0.0, 0.0, 0.0, 0.0, {}, ["zero_datum"])
    qt = q_tilde_line(f, pr, re=line_re)
    lam = qt.points
    q2 = np.abs(qt.values) ** 2
    mag2 = np.abs(lam) ** 2
    dom = np.zeros_like(q2)
    for l in range(k + 4):
        dom = dom + mag2 ** l * _theta_ratio(lam, k + 3 - l)
    dom = dom * q2
    p_domain = math.sqrt(float(np.sum(qt.line.weights * dom)) / (2 * np.pi))
    q_trace = half_norm_spectral(qt, np_half, order=k + 2)
    p_trace = math.sqrt(2.0) * q_trace
    tails = {"p_domain": _tail_fraction(qt.line, dom),
             "q_trace": _tail_fraction(qt.line, q2 * (1 + np.abs(lam)) ** (2 * k + 5)),
             "f": _tail_fraction(fl, np.abs(fv) ** 2 * (1 + np.abs(fl.points)) ** (2 * k + 1))}
    worst = max(tails.values())
    if worst > NORM_TAIL_MAX:
        raise GridTooCoarse(f"norm tail fraction {worst:.1%} above {NORM_TAIL_MAX:.0%}; raise im_max")
    ratio = (p_domain + p_trace + q_trace) / f_norm
    return NormReport(ratio, p_domain, p_trace, q_trace, f_norm, tails, flags)


# ---------------------------------------------------------------------------
# exact polynomial oracle

def polynomial_oracle_check(degrees=range(5), n_points: int = 100, seed: int = 0,
                            kappa1: float = 1.0, kappa2: float = 1.0, p_shift: float = 0.0,
                            tol: float = 1e-12):
    """Residuals of the closed-form polynomial pairs at random points.

    For each degree m the datum has random coefficients; the Laplace residual
    is taken at a 10 x (n_points/10) random (r, theta) tensor grid with exact
    derivatives, the slit conditions at n_points random radii.
    """
    rng = np.random.default_rng(seed)
    out = []
    for m in degrees:
        fc = rng.uniform(-1, 1, m + 1)
        q0, q1 = rng.uniform(-1, 1, 2)
        pair = PolynomialPair(fc, q0, q1, kappa1, kappa2, p_shift=p_shift)
        nr = 10
        r2 = np.sort(rng.uniform(0.1, 2.0, nr))
        th = np.sort(rng.uniform(-np.pi, np.pi, max(1, n_points // nr)))
        rs = np.sort(rng.uniform(0.1, 2.0, n_points))
        checks = [laplace_residual(pair, r2, th, method="exact", tol=tol),
                  bc_residuals(pair, rs, tol=tol),
                  ode_residual(pair, rs, tol=tol)]
        checks += venttsel_residuals(pair, rs, tol=tol)[:2]
        for c in checks:
            c.name = f"poly_m{m}_{c.name}"
            c.tol = tol
            c.passed = bool(c.rel <= tol)
        out.extend(checks)
    return out


def run_all(bundle: SolutionBundle, sign_audit: bool | None = None):
    """Every physical-system check on a solved bundle."""
    audit = bundle.params.sign_audit if sign_audit is None else sign_audit
    reps = [laplace_residual(bundle), bc_residuals(bundle),
            ode_residual(bundle, sign_audit=audit)]
    reps += venttsel_residuals(bundle)
    reps += tip_and_decay_checks(bundle, bundle.params)
    return reps


__all__ = ["ResidualReport", "NormReport", "PolynomialPair", "CallableField", "PerturbedField",
           "as_field", "laplace_residual", "bc_residuals", "ode_residual", "venttsel_residuals",
           "tip_and_decay_checks", "norm_estimate_report", "polynomial_oracle_check", "run_all",
           "reports_to_json", "summary_table", "NORM_RATIO_BOUND"]

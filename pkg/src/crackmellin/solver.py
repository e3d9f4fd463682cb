"""Spectral solution of the crack problem and its physical reconstruction.

With kappa0 = 2 kappa2 and F the kernel

    F(lam, z) = (kappa0 pi)^z K(lam+1) / K(lam+z+1) * f~(lam+z+2) / (lam (lam+z+1)),

the transform of q on a line -1 < Re lam < -1/2 is

    q~(lam) = int_{L0,eps} F(lam, z) dz / (e^{i pi z} - e^{-i pi z})
            = -i v.p. int F(lam, iy) dy / (2 sinh pi y) - F(lam, 0) / 2,

where L0,eps runs upward along the imaginary axis and bypasses z = 0 on the
left by a half circle of radius eps.  Shifting the contour to Re z = theta
picks up the residue at z = 0: q~ = q~2 - F(lam, 0).

The field is p~(lam, theta) = q~(lam) cos(lam theta) / cos(lam pi).

Optionally (``coupling_correction``) the homogeneous solution

    q~h(lam) = c (kappa0 pi)^(1/2 - lam) K(lam+1) / (pi lam sin(pi lam)),
    c = -q~(-1/2) / (2 kappa0),

is added.  It removes the pole of d = q~ tan(pi lam) at lam = -1/2, which is
what the coupling term of the radial equation needs, at the price of a simple
pole at lam = -1 (q'(0) no longer vanishes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigError, ContourPoleClash, TailTooFat
from .mellin import TAIL_TOL, SpectralFunction, VerticalLine
from .sources import SourceTerm, validate_compatibility
from .special import Strip, log_k, log_d0

POLE_MARGIN = 0.05


@dataclass(frozen=True)
class SolverParams:
    """Physical constants, regularity indices and numerical settings.

    ``theta`` is the abscissa of the shifted contour used by the split
    q = q1 + q2 (defaults to the middle of its admissible window).
    ``pv_reg_width`` is kept for configuration compatibility: the symmetric
    midpoint nodes make the principal-value subtraction exact, so it has no
    numerical effect.
    """

    kappa1: float = 1.0
    kappa2: float = 1.0
    k: int = 0
    mu: float = 1.25
    inversion_line_re: float = -0.75
    contour_eps: float = 0.25
    pv_reg_width: float = 1e-3
    y_max: float = 12.0
    theta: float | None = None
    im_max: float = 40.0
    n_nodes: int = 4096
    pv_step: float = 0.02
    sign_audit: bool = False
    coupling_correction: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def kappa0(self) -> float:
        return 2.0 * self.kappa2

    @property
    def nu(self) -> float:
        return 2.0 * (self.mu - self.k) - 1.0

    @property
    def vartheta(self) -> float:
        return 0.5 * self.nu - 0.25 if self.theta is None else self.theta

    @property
    def alpha(self) -> float:
        return 2.0 + 2.0 * self.vartheta - self.nu

    def validate(self):
        def need(cond, text):
            if not cond:
                raise ConfigError(f"parameter window violated: {text}")
        need(self.kappa1 > 0, f"kappa1 > 0 (kappa1 = {self.kappa1})")
        need(self.kappa2 > 0, f"kappa2 > 0 (kappa2 = {self.kappa2})")
        need(int(self.k) == self.k and self.k >= 0, f"k a non-negative integer (k = {self.k})")
        d = self.mu - self.k - 2
        need(-1 < d < -0.5, f"-1 < mu - k - 2 < -1/2 (mu - k - 2 = {d:g})")
        nu, th = self.nu, self.vartheta
        need((nu - 1) / 2 < th < nu / 2,
             f"(nu - 1)/2 < theta < nu/2 with nu = 2(mu - k) - 1 = {nu:g} (theta = {th:g})")
        need(-1 < self.inversion_line_re < -0.5,
             f"-1 < inversion_line_re < -1/2 (got {self.inversion_line_re:g})")
        need(0 < self.contour_eps < 0.5, f"0 < contour_eps < 1/2 (got {self.contour_eps:g})")
        need(self.pv_reg_width > 0, "pv_reg_width > 0")
        need(self.y_max > 0, "y_max > 0")
        need(self.pv_step > 0, "pv_step > 0")
        need(self.im_max > 0 and self.n_nodes >= 16 and self.n_nodes % 2 == 0,
             "im_max > 0 and an even n_nodes >= 16")

    def line(self, re: float | None = None) -> VerticalLine:
        return VerticalLine(self.inversion_line_re if re is None else re,
                            self.im_max, self.n_nodes, "trapezoid")


# ---------------------------------------------------------------------------
# kernel

def _log_kernel_parts(lam, zeta, f: SourceTerm, kappa0: float):
    """log|...| free evaluation of F(lam, zeta) (broadcasting)."""
    lam = np.asarray(lam, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    w = lam + zeta + 1.0
    val = np.exp(zeta * math.log(kappa0 * math.pi) + log_k(lam + 1.0) - log_k(w))
    return val * f.mellin(w + 1.0) / (lam * w)


def kernel(lam, zeta, f: SourceTerm, params: SolverParams):
    """The integrand factor F(lam, zeta) shared by every representation of q~."""
    return _log_kernel_parts(lam, zeta, f, params.kappa0)


def _residue_term(lam, f: SourceTerm):
    """F(lam, 0) = f~(lam+2) / (lam (lam+1))."""
    lam = np.asarray(lam, dtype=complex)
    return f.mellin(lam + 2.0) / (lam * (lam + 1.0))


def _check_clash(lam, eps):
    d = abs(complex(lam) + 1.0)
    if d <= eps + POLE_MARGIN:
        raise ContourPoleClash(
            f"kernel pole at zeta = -(lam+1) lies {d:.3f} from 0, inside or too close to "
            f"the eps = {eps} half circle; use eps < {max(d - POLE_MARGIN, 0):.3f}")


def _upward_contour(eps: float, y_max: float, width: float = 0.25, n_arc: int = 96):
    """Nodes and dz-weights on L0,eps traversed from -i y_max to +i y_max."""
    gx, gw = np.polynomial.legendre.leggauss(24)
    n = max(1, math.ceil((y_max - eps) / width))
    e = np.linspace(eps, y_max, n + 1)
    a, b = e[:-1, None], e[1:, None]
    y = (0.5 * (b - a) * gx + 0.5 * (a + b)).ravel()
    wy = (0.5 * (b - a) * gw).ravel()
    ax, aw = np.polynomial.legendre.leggauss(n_arc)
    # phi runs from -pi/2 down to -3pi/2 (clockwise through -eps)
    phi = -np.pi - 0.5 * np.pi * ax
    z_arc = eps * np.exp(1j * phi)
    w_arc = 1j * z_arc * (-0.5 * np.pi) * aw
    # straight parts: z = i y, dz = i dy
    z = np.concatenate([-1j * y[::-1], z_arc, 1j * y])
    w = np.concatenate([1j * wy[::-1], w_arc, 1j * wy])
    return z, w


def _inv_two_i_sin(z):
    """1 / (e^{i pi z} - e^{-i pi z}) evaluated without overflow."""
    z = np.asarray(z, dtype=complex)
    up = np.imag(z) >= 0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        e_up = np.exp(1j * np.pi * np.where(up, z, 0.5))     # |.| <= 1 when Im z >= 0
        e_dn = np.exp(-1j * np.pi * np.where(up, 0.5, z))    # |.| <= 1 when Im z < 0
        return np.where(up, e_up / (e_up * e_up - 1.0), -e_dn / (e_dn * e_dn - 1.0))


def _pv_nodes(params: SolverParams, step: float | None = None):
    h = params.pv_step if step is None else step
    m = int(math.ceil(params.y_max / h))
    y = (np.arange(-m, m) + 0.5) * h
    return y, h


def q_tilde_pv(lam: complex, f: SourceTerm, params: SolverParams, step: float | None = None) -> complex:
    """q~ via the principal-value integral along the imaginary axis.

    Midpoint nodes placed symmetrically about y = 0 cancel the odd singular part
    exactly; what remains is the regular integrand (g(y) - g(0)) / (2 sinh pi y).
    """
    y, h = _pv_nodes(params, step)
    g = kernel(lam, 1j * y, f, params)
    _tail_guard(g, lambda: np.abs(g[[0, -1]]) * math.exp(-math.pi * params.y_max))
    pv = np.sum(g / (2.0 * np.sinh(np.pi * y))) * h
    hom = complex(np.ravel(q_tilde_homogeneous(lam, correction_coefficient(f, params), params))[0])
    return complex(-1j * pv - 0.5 * _residue_term(lam, f) + hom)


def _tail_guard(g, edge):
    peak = np.max(np.abs(g))
    if peak > 0 and np.max(edge()) > TAIL_TOL * max(peak, 1e-300):
        raise TailTooFat("PV integrand has not decayed at |y| = y_max; increase y_max")


def q_tilde_contour(lam: complex, f: SourceTerm, params: SolverParams,
                    eps: float | None = None) -> complex:
    """q~ by direct quadrature over L0,eps."""
    eps = params.contour_eps if eps is None else eps
    _check_clash(lam, eps)
    z, w = _upward_contour(eps, params.y_max)
    vals = kernel(lam, z, f, params) * _inv_two_i_sin(z)
    hom = complex(np.ravel(q_tilde_homogeneous(lam, correction_coefficient(f, params), params))[0])
    return complex(np.sum(w * vals) + hom)


def q_split(lam: complex, f: SourceTerm, params: SolverParams,
            theta: float | None = None) -> tuple[complex, complex]:
    """(q~1, q~2): the residue at zeta = 0 and the integral over Re zeta = theta.

    The optional homogeneous correction is counted in q~2.
    """
    th = params.vartheta if theta is None else theta
    gx, gw = np.polynomial.legendre.leggauss(24)
    n = max(1, math.ceil(2 * params.y_max / 0.25))
    e = np.linspace(-params.y_max, params.y_max, n + 1)
    a, b = e[:-1, None], e[1:, None]
    eta = (0.5 * (b - a) * gx + 0.5 * (a + b)).ravel()
    we = (0.5 * (b - a) * gw).ravel()
    z = th + 1j * eta
    q2 = np.sum(1j * we * kernel(lam, z, f, params) * _inv_two_i_sin(z))
    q2 = q2 + np.ravel(q_tilde_homogeneous(lam, correction_coefficient(f, params), params))[0]
    q1 = -_residue_term(lam, f)
    return complex(q1), complex(q2)


def y_contour(lam: complex, f: SourceTerm, params: SolverParams, eps: float | None = None) -> complex:
    """Particular solution y of y(lam+1) - y(lam) = h(lam),

    y(lam) = (1/2i) int_{L0,eps} h(lam+z) [cot(pi z) + i] dz with
    h(lam) = -f~(lam+2) / (kappa0 (lam+1) d0(lam+1)).
    """
    eps = params.contour_eps if eps is None else eps
    _check_clash(lam, eps)
    z, w = _upward_contour(eps, params.y_max)
    return complex(np.sum(w * _h_of(lam + z, f, params) * _cot_plus_i(z)) / 2j)


def h_rhs(lam, f: SourceTerm, params: SolverParams):
    """Right side h(lam) of the first-order difference equation for y."""
    return _h_of(np.asarray(lam, dtype=complex), f, params)


def _h_of(lam, f, params):
    k0 = params.kappa0
    w = lam + 1.0
    return -f.mellin(lam + 2.0) * np.exp(-log_d0(w, k0)) / (k0 * w)


def _cot_plus_i(z):
    """cot(pi z) + i = 2i e^{i pi z} / (e^{i pi z} - e^{-i pi z})."""
    z = np.asarray(z, dtype=complex)
    up = np.imag(z) >= 0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        e2 = np.exp(2j * np.pi * np.where(up, z, 0.5))     # small when Im z > 0
        em = np.exp(-2j * np.pi * np.where(up, 0.5, z))    # small when Im z < 0
        return np.where(up, -2j * e2 / (1.0 - e2), 2j / (1.0 - em))


def d_of(lam, q_tilde_value):
    """d(lam) = q~(lam) tan(pi lam)."""
    return q_tilde_value * np.tan(np.pi * np.asarray(lam, dtype=complex))


def correction_coefficient(f: SourceTerm, params: SolverParams) -> float:
    """c such that q~ + q~h vanishes at lam = -1/2 (0 unless enabled)."""
    if not params.coupling_correction:
        return 0.0
    return -q_tilde_pv(-0.5 + 0j, f, replace(params, coupling_correction=False)).real / (
        2.0 * params.kappa0)


def q_tilde_homogeneous(lam, coef: float, params: SolverParams):
    """coef (kappa0 pi)^(1/2 - lam) K(lam+1) / (pi lam sin(pi lam))."""
    lam = np.asarray(lam, dtype=complex)
    if coef == 0.0:
        return np.zeros_like(lam)
    k0 = params.kappa0
    with np.errstate(over="ignore"):
        s = np.sin(np.pi * lam)
    return coef * np.exp((0.5 - lam) * math.log(k0 * math.pi) + log_k(lam + 1.0)) / (
        math.pi * lam * s)


# ---------------------------------------------------------------------------
# whole-line evaluation

def q_tilde_line(f: SourceTerm, params: SolverParams, re: float | None = None,
                 part: str = "full") -> SpectralFunction:
    """q~ at every node of a trapezoid line, by one discrete correlation.

    With t_j = (j + 1/2) h and PV nodes y_m = (m + 1/2) h the sum
    lam_j + i y_m lands on the integer grid u = n h, so the kernel factors
    K(lam+iy+1), f~(lam+iy+2) are evaluated once per u.  ``part`` selects
    "full", "q1" or "q2".
    """
    line = params.line(re)
    c = line.re
    t = line.t
    h = line.weights[0]
    lam = c + 1j * t
    q1 = -_residue_term(lam, f)
    if part == "q1":
        return SpectralFunction(line, q1, Strip(-1.0, -0.5), {"part": "q1"})
    m = int(math.ceil(params.y_max / h))
    lk0 = math.log(params.kappa0 * math.pi)
    n_half = t.size // 2
    # u-grid index n runs over [-n_half - m + 1, n_half + m]
    n = np.arange(-n_half - m + 1, n_half + m + 1)
    u = n * h
    a_fac = np.exp(log_k(lam + 1.0)) / lam
    if part == "full":
        shift = 0.0
        y = (np.arange(-m, m) + 0.5) * h
        wk = 1.0 / (2.0 * np.sinh(np.pi * y))
        pref = -1j * h
    elif part == "q2":
        shift = params.vartheta
        y = (np.arange(-m, m) + 0.5) * h
        wk = 1.0 / (2.0 * np.sin(np.pi * (shift + 1j * y)))
        pref = h * math.exp(shift * lk0)
    else:
        raise ValueError(f"unknown part {part!r}")
    wv = c + 1.0 + shift + 1j * u
    b = np.exp(1j * u * lk0 - log_k(wv)) * f.mellin(wv + 1.0) / wv
    # S_j = sum_m b(u = t_j + y_m) wk(y_m); in array indices this is
    # S[i] = sum_k b[i + k] wk[k], a correlation
    s_j = fftconvolve(b, wk[::-1], mode="valid")[: t.size]
    phase = np.exp(-1j * t * lk0)
    vals = pref * a_fac * phase * s_j
    if part == "full":
        vals = vals + q1 * 0.5
    vals = vals + q_tilde_homogeneous(lam, correction_coefficient(f, params), params)
    return SpectralFunction(line, vals, Strip(-1.0, -0.5), {"part": part})


# ---------------------------------------------------------------------------
# physical side

def _cos_ratio(lam, theta):
    """cos(lam theta) / cos(lam pi) for theta in [-pi, pi], stable in Im lam."""
    lam = np.asarray(lam, dtype=complex)[:, None]
    th = np.asarray(theta, dtype=float)[None, :]
    pos = np.imag(lam) >= 0
    lp = np.where(pos, lam, -lam)   # cos is even: work with Im >= 0
    num = np.exp(1j * lp * (th + np.pi)) + np.exp(1j * lp * (np.pi - th))
    return num / (np.exp(2j * np.pi * lp) + 1.0)


def _sin_ratio(lam, theta):
    """sin(lam theta) / cos(lam pi), stable in Im lam."""
    lam = np.asarray(lam, dtype=complex)[:, None]
    th = np.asarray(theta, dtype=float)[None, :]
    pos = np.imag(lam) >= 0
    sgn = np.where(pos, 1.0, -1.0)
    lp = np.where(pos, lam, -lam)   # sin is odd
    num = np.exp(1j * lp * (th + np.pi)) - np.exp(1j * lp * (np.pi - th))
    return sgn * num / (1j * (np.exp(2j * np.pi * lp) + 1.0))


def _inverse_rows(line: VerticalLine, spec: np.ndarray, r: np.ndarray) -> np.ndarray:
    """(1/2 pi) sum_t w r^(-lam) spec[t, ...] for each r (rows)."""
    lr = np.log(np.asarray(r, dtype=float))
    mat = np.exp(-np.outer(lr, line.points)) * (line.weights / (2 * np.pi))
    return mat @ spec


@dataclass
class SolutionBundle:
    """Spectral solution plus physical samples.

    ``p`` is indexed (r, theta).  Imaginary leakage of each physical field is
    recorded in ``diagnostics``; the stored arrays are the real parts.
    """

    params: SolverParams
    source: SourceTerm
    q_tilde: SpectralFunction
    r: np.ndarray
    theta: np.ndarray
    q: np.ndarray
    q_prime: np.ndarray
    q_second: np.ndarray
    p: np.ndarray
    p_theta_plus: np.ndarray
    p_theta_minus: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    # evaluation of any derived field at arbitrary points -----------------
    def _real(self, z, key=None):
        leak = float(np.max(np.abs(np.imag(z)), initial=0.0))
        scale = float(np.max(np.abs(np.real(z)), initial=0.0))
        if key:
            self.diagnostics[f"imag_leak_{key}"] = leak / (1.0 + scale)
        return np.real(z)

    def q_at(self, r, deriv: int = 0, key: str | None = None):
        """q, q' or q'' at r (spectral: multiply by (-lam)(-lam-1)... and divide by r^k)."""
        lam = self.q_tilde.points
        fac = np.ones_like(lam)
        for j in range(deriv):
            fac = fac * (-lam - j)
        r = np.atleast_1d(np.asarray(r, dtype=float))
        v = _inverse_rows(self.q_tilde.line, fac * self.q_tilde.values, r) / r ** deriv
        return self._real(v, key)

    def p_at(self, r, theta, dr: int = 0, dtheta: int = 0, key: str | None = None):
        """d^dr/dr^dr d^dtheta/dtheta^dtheta p on the tensor grid r x theta."""
        lam = self.q_tilde.points
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        ang = (_cos_ratio(lam, theta) if dtheta % 2 == 0 else _sin_ratio(lam, theta))
        sign = [1, -1, -1, 1][dtheta % 4]
        ang = sign * ang * lam[:, None] ** dtheta
        fac = np.ones_like(lam)
        for j in range(dr):
            fac = fac * (-lam - j)
        spec = (fac * self.q_tilde.values)[:, None] * ang
        v = _inverse_rows(self.q_tilde.line, spec, r) / r[:, None] ** dr
        return self._real(v, key)


def solve(f: SourceTerm, params: SolverParams, r=None, theta=None,
          check_compat: bool = True, compat_rel_tol: float = 1e-8) -> SolutionBundle:
    """Spectral solve and physical reconstruction on the default or given grids."""
    if check_compat:
        validate_compatibility(f, rel_tol=compat_rel_tol, raise_on_fail=True)
    r = np.logspace(-3, 3, 400) if r is None else np.asarray(r, dtype=float)
    if theta is None:
        theta = np.linspace(-np.pi, np.pi, 257)[1:]
    theta = np.asarray(theta, dtype=float)
    qt = q_tilde_line(f, params)
    mag = np.abs(qt.values)
    peak = mag.max()
    if peak > 0 and max(mag[0], mag[-1]) > TAIL_TOL * peak:
        raise TailTooFat("q~ has not decayed at the ends of the inversion line; raise im_max")
    b = SolutionBundle(params, f, qt, r, theta, *([np.empty(0)] * 6))
    b.q = b.q_at(r, key="q")
    b.q_prime = b.q_at(r, 1, key="q_prime")
    b.q_second = b.q_at(r, 2, key="q_second")
    b.p = b.p_at(r, theta, key="p")
    pt = b.p_at(r, [np.pi, -np.pi], dtheta=1, key="p_theta")
    b.p_theta_plus, b.p_theta_minus = pt[:, 0], pt[:, 1]
    b.diagnostics["q_tilde_conjugate_defect"] = qt.conjugate_symmetry_defect()
    b.diagnostics["q_tilde_edge_ratio"] = float(max(mag[0], mag[-1]) / peak) if peak else 0.0
    return b

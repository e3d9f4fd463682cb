"""Complex special functions: gamma, omega(z) = z cot(pi z), the product K and relatives.

Array-level helpers (``loggamma``, ``cot_pi``, ``omega_array``, ``log_k``...) work on
numpy arrays and are what the solver uses.  The point operations (``gamma``,
``omega``, ``k_product``...) wrap them, validate arguments and return a
:class:`ComplexEval` carrying an error estimate.

All gamma products are formed in log space; ``exp`` is only taken at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, comb, zeta

from .errors import DegenerateError, DomainError, NonConvergence, PoleError

EPS = np.finfo(float).eps
LOG_2PI_HALF = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Strip:
    """Open vertical strip ``re_min < Re z < re_max``."""

    re_min: float
    re_max: float

    def __post_init__(self):
        if not self.re_min < self.re_max:
            raise ValueError(f"empty strip ({self.re_min}, {self.re_max})")

    def contains(self, z) -> np.ndarray:
        re = np.real(z)
        return (re > self.re_min) & (re < self.re_max)

    def require(self, z, what: str = "argument") -> None:
        if not np.all(self.contains(z)):
            bad = np.asarray(z).ravel()[~np.asarray(self.contains(z)).ravel()][0]
            raise DomainError(
                f"{what} {complex(bad)} outside strip {self.re_min} < Re < {self.re_max}"
            )


@dataclass(frozen=True)
class ComplexEval:
    value: complex
    est_rel_err: float

    def __complex__(self):
        return complex(self.value)


K_STRIP = Strip(-0.5, 2.0)
K0_STRIP = Strip(-1.0, 0.5)
K1_STRIP = Strip(-1.5, 0.0)


# ---------------------------------------------------------------------------
# elementary helpers

def clog1p(x):
    """log(1 + x) for complex x, accurate for small |x| (numpy's is not)."""
    x = np.asarray(x, dtype=complex)
    a, b = x.real, x.imag
    re = 0.5 * np.log1p(2.0 * a + a * a + b * b)
    im = np.arctan2(b, 1.0 + a)
    return re + 1j * im


def cexpm1(x):
    x = np.asarray(x, dtype=complex)
    a, b = x.real, x.imag
    s = np.sin(0.5 * b)
    re = np.expm1(a) * np.cos(b) - 2.0 * s * s
    return re + 1j * np.exp(a) * np.sin(b)


def log_sin_pi(z):
    """A logarithm of sin(pi z), free of overflow for large |Im z|."""
    z = np.asarray(z, dtype=complex)
    upper = z.imag >= 0
    # sin(pi z) = e^{-i pi z} (e^{2 i pi z} - 1) / (2i)   for Im z >= 0
    #           = e^{+i pi z} (1 - e^{-2 i pi z}) / (2i)  for Im z < 0
    sgn = np.where(upper, 1.0, -1.0)
    w = cexpm1(2j * np.pi * z * sgn)
    return -1j * np.pi * z * sgn + np.log(sgn * w / 2j)


def cot_pi(z):
    """cot(pi z) via e^{+-2 i pi z}; bounded for large |Im z|."""
    z = np.asarray(z, dtype=complex)
    upper = z.imag >= 0
    sgn = np.where(upper, 1.0, -1.0)
    w = cexpm1(2j * np.pi * z * sgn)  # e^{...} - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1j * sgn * (2.0 + w) / w


def tan_pi(z):
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / cot_pi(z)


# ---------------------------------------------------------------------------
# gamma

# Lanczos coefficients, g = 671/128, 14 terms (Numerical Recipes, 3rd ed.).
_LANCZOS_G = 5.2421875
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_COEF = np.array([
    57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5,
])
_SQRT_2PI = 2.5066282746310005


def _loggamma_right(z):
    # valid for Re z >= 1/2
    tmp = z + _LANCZOS_G
    tmp = (z + 0.5) * np.log(tmp) - tmp
    ser = np.full_like(z, _LANCZOS_C0)
    for j, c in enumerate(_LANCZOS_COEF):
        ser = ser + c / (z + (j + 1))
    return tmp + np.log(_SQRT_2PI * ser / z)


def _is_gamma_pole(z):
    z = np.asarray(z, dtype=complex)
    return (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))


def loggamma(z):
    """A logarithm of Gamma(z) (exp of it is Gamma; branch not normalised).

    Lanczos approximation on Re z >= 1/2, reflection formula elsewhere.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(_is_gamma_pole(z)):
        raise PoleError("Gamma has a pole at a non-positive integer")
    left = z.real < 0.5
    out = np.empty_like(z)
    right = ~left
    if np.any(right):
        out[right] = _loggamma_right(z[right])
    if np.any(left):
        zl = z[left]
        out[left] = math.log(math.pi) - log_sin_pi(zl) - _loggamma_right(1.0 - zl)
    return out


def gamma_array(z):
    return np.exp(loggamma(z))


def gamma(z: complex) -> ComplexEval:
    """Gamma(z) with a conservative relative-error estimate."""
    lg = complex(loggamma(np.array([z]))[0])
    # absolute error of the log ~ a few ulps of its magnitude
    err = 16 * EPS * (abs(lg) + abs(z) + 1.0)
    return ComplexEval(complex(np.exp(lg)), err)


# ---------------------------------------------------------------------------
# omega

def _is_nonzero_integer(z):
    z = np.asarray(z, dtype=complex)
    return (z.imag == 0) & (z.real != 0) & (z.real == np.round(z.real))


def omega_array(lam):
    """omega(lam) = lam cot(pi lam); the removable value 1/pi at lam = 0."""
    lam = np.asarray(lam, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = lam * cot_pi(lam)
    return np.where(lam == 0, 1.0 / np.pi, out)


def omega(lam: complex) -> ComplexEval:
    if _is_nonzero_integer(lam):
        raise PoleError(f"omega has a pole at {lam}")
    val = complex(omega_array(np.array([lam]))[0])
    return ComplexEval(val, 8 * EPS * (1.0 + abs(lam)))


def arg_omega(lam: complex) -> float:
    """arctan((l2 sin 2pi l1 - l1 sinh 2pi l2) / (l1 sin 2pi l1 + l2 sinh 2pi l2)).

    Equal to arg omega(lam) wherever Re omega > 0 (in particular for
    |Im lam| >= 1 and moderate Re lam); in general it agrees modulo pi.
    """
    l1, l2 = float(np.real(lam)), float(np.imag(lam))
    s1 = math.sin(2 * math.pi * l1)
    if abs(l2) > 1.0:
        # divide through by sinh(2 pi l2) to stay finite
        a = 2 * math.pi * abs(l2)
        inv_sh = math.copysign(2.0 * math.exp(-a) / (-math.expm1(-2 * a)), l2)
        num = l2 * s1 * inv_sh - l1
        den = l1 * s1 * inv_sh + l2
        scale = abs(l1 * inv_sh) + abs(l2)
    else:
        sh = math.sinh(2 * math.pi * l2)
        num = l2 * s1 - l1 * sh
        den = l1 * s1 + l2 * sh
        scale = abs(l1) + abs(l2 * sh)
    # scale ignores the factor sin(2 pi l1), so a cancelled denominator is caught
    if abs(den) <= 64 * EPS * max(scale, abs(num), 1e-300):
        raise DegenerateError(f"arg_omega: vanishing denominator at {lam}")
    return math.atan(num / den)


# ---------------------------------------------------------------------------
# the infinite product K

_BERN = bernoulli(40)
_NTERMS = 20  # asymptotic terms used at the truncation index


def _bernoulli_poly(m: int, x):
    # B_m(x) = sum_j C(m, j) B_j x^{m-j}, Horner in x
    coefs = [comb(m, j, exact=True) * _BERN[j] for j in range(m + 1)]
    acc = np.zeros_like(x) + coefs[0]
    for c in coefs[1:]:
        acc = acc * x + c
    return acc


def _d_combo(m: int, lam):
    """B_m(l-1/2) + B_m(1-l) - B_m(1/2-l) - B_m(l), cancellation-aware."""
    h = lam - 0.5
    if m % 2 == 0:
        return -m * h ** (m - 1)
    return 2.0 * (_bernoulli_poly(m, h) - _bernoulli_poly(m, lam)) + m * h ** (m - 1)


def _series_coeffs(lam):
    """c_k of log-factor(n) = sum_k c_k n^{-k} and d_k of the gamma part alone."""
    ck, dk = [], []
    for k in range(1, _NTERMS + 1):
        d = (-1) ** (k + 1) * _d_combo(k + 1, lam) / (k * (k + 1))
        dk.append(d)
        ck.append(d + (2 * lam - 1) * 0.5 ** k / k)
    return ck, dk


def _truncation_index(lam):
    n = 8.0 * np.abs(lam) + 64.0
    return (2 ** np.ceil(np.log2(n))).astype(int)


@lru_cache(maxsize=None)
def _sum_log_ratio(n_trunc: int) -> float:
    # sum_{n<=N} log(n / (n - 1/2)); lgamma differences lose digits here
    n = np.arange(1, n_trunc + 1, dtype=float)
    return math.fsum(np.log1p(1.0 / (2.0 * n - 1.0)))


def _log_k_group(lam, n_trunc: int, block: int = 512):
    ck, dk = _series_coeffs(lam)
    big = float(n_trunc)
    # gamma part of log-factor at n = N, from its expansion
    g_n = sum(d / big ** (k + 1) for k, d in enumerate(dk))
    total = n_trunc * g_n
    # subtract sum_{m<N} m * l(m),  l(m) = log(1 + (lam-1/2)/((m+1/2-lam)(m+lam)))
    lam_c = lam[:, None]
    for start in range(1, n_trunc, block):
        m = np.arange(start, min(start + block, n_trunc), dtype=float)[None, :]
        ell = clog1p((lam_c - 0.5) / ((m + 0.5 - lam_c) * (m + lam_c)))
        total = total - (m * ell).sum(axis=1)
    s_log = _sum_log_ratio(n_trunc)
    total = total + (2 * lam - 1) * s_log
    # tail over n > N
    # c_1 vanishes identically (the 1/n terms cancel)
    tail = sum(c * zeta(k + 1, big + 1) for k, c in enumerate(ck) if k > 0)
    total = total + tail
    err = (np.abs(ck[-1]) * zeta(_NTERMS, big + 1)
           + np.abs(dk[-1]) / big ** _NTERMS
           + 64 * EPS * (1.0 + np.abs(lam)) * math.log(big))
    return total, err


def log_k_raw(lam):
    """log K(lam) from the product without any strip check.

    Returns ``(logK, abs_err_estimate)``.  The partial product up to N is summed
    exactly in the form N*G(N) - sum m*l(m); the gamma part G(N) and the tail
    over n > N come from the 1/n expansion of the log-factor (Bernoulli
    polynomials, Hurwitz zeta).  N = 2^ceil(log2(8|lam| + 64)).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    shape = lam.shape
    flat = lam.ravel()
    out = np.empty_like(flat)
    err = np.empty(flat.shape)
    nt = _truncation_index(flat)
    for n in np.unique(nt):
        sel = nt == n
        out[sel], err[sel] = _log_k_group(flat[sel], int(n))
    if not np.all(np.isfinite(err)):
        raise NonConvergence("K product tail estimate is not finite")
    return out.reshape(shape), err.reshape(shape)


def log_k(lam):
    """log K on its analyticity strip -1/2 < Re lam < 2 (array version)."""
    K_STRIP.require(lam, "K argument")
    return log_k_raw(lam)[0]


def k_array(lam):
    return np.exp(log_k(lam))


def k_product(lam: complex) -> ComplexEval:
    K_STRIP.require(lam, "K argument")
    if lam == 1.5:
        return ComplexEval(0j, 0.0)  # simple zero
    lk, err = log_k_raw(np.array([lam]))
    if err[0] > 1e-8:
        raise NonConvergence(f"K({lam}): tail error {err[0]:.2e} above tolerance")
    return ComplexEval(complex(np.exp(lk[0])), float(err[0]))


def k0(lam: complex) -> ComplexEval:
    """K0(lam) = 1 / ((lam + 1) K(lam + 1)) on -1 < Re lam < 1/2."""
    K0_STRIP.require(lam, "K0 argument")
    kv = k_product(lam + 1)
    return ComplexEval(1.0 / ((lam + 1) * kv.value), kv.est_rel_err + 4 * EPS)


def k1(lam: complex) -> ComplexEval:
    """K1(lam) = K(lam) cot(pi lam) on -3/2 < Re lam < 0.

    Evaluated as K(lam + 1) / (pi lam), which is the same function by the
    functional relation K(lam + 1) = pi omega(lam) K(lam) and keeps every
    product evaluation inside K's own strip.
    """
    K1_STRIP.require(lam, "K1 argument")
    kv = k_product(lam + 1)
    return ComplexEval(kv.value / (np.pi * lam), kv.est_rel_err + 4 * EPS)


def log_d0(lam, kappa0: float):
    lam = np.asarray(lam, dtype=complex)
    return 1j * np.pi * lam + (0.5 - lam) * math.log(kappa0 * math.pi) + log_k(lam)


def d0(lam: complex, kappa0: float) -> ComplexEval:
    """d0(lam) = exp(i pi lam) (kappa0 pi)^(1/2 - lam) K(lam)."""
    if not kappa0 > 0:
        raise DomainError("kappa0 must be positive")
    kv = k_product(lam)
    val = np.exp(1j * np.pi * lam + (0.5 - lam) * math.log(kappa0 * math.pi)) * kv.value
    return ComplexEval(complex(val), kv.est_rel_err + 8 * EPS * (1 + abs(lam)))


M_ASYM = 10.0


def k_asymptotic(lam: complex, m_asym: float = M_ASYM) -> ComplexEval:
    """Leading large-|Im| term |omega|^(l1 - 1/2) exp(-l2 arg omega)."""
    if abs(np.imag(lam)) < m_asym:
        raise DomainError(f"|Im lam| = {abs(np.imag(lam))} below asymptotic threshold {m_asym}")
    l1, l2 = float(np.real(lam)), float(np.imag(lam))
    w = abs(complex(omega_array(np.array([lam]))[0]))
    val = w ** (l1 - 0.5) * math.exp(-l2 * arg_omega(lam))
    return ComplexEval(complex(val), 1.0)  # remainder is only known to be O(1)

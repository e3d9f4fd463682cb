"""Mellin transform machinery on vertical lines.

Conventions::

    h~(s) = int_0^inf r^(s-1) h(r) dr
    h(r)  = (1/2 pi i) int_{c-i inf}^{c+i inf} r^(-s) h~(s) ds
          = (1/2 pi) int r^(-c-it) h~(c+it) dt

Physical-side integrals are done in the variable x = log r with Gauss-Legendre
panels; the pieces below r = e^-40 and above e^40 are closed with a local
power-law model (they are negligible for every exponentially decaying input).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (DivergentTransform, GridTooCoarse, LineMismatch, StripViolation,
                     TailTooFat)
from .special import Strip

RULES = ("trapezoid", "gauss-legendre-panels")
DEFAULT_IM_MAX = 40.0
DEFAULT_NODES = 4096
TAIL_TOL = 1e-10


@dataclass(frozen=True)
class VerticalLine:
    """The line Re s = ``re`` truncated to |Im s| <= ``im_max``.

    ``trapezoid`` uses the offset nodes t_j = (j + 1/2) h, h = 2 T / n, which are
    symmetric about the real axis and never hit t = 0.  ``gauss-legendre-panels``
    places 16-point panels on geometrically growing intervals, for slowly
    (algebraically) decaying integrands with a large ``im_max``.
    """

    re: float
    im_max: float = DEFAULT_IM_MAX
    n_nodes: int = DEFAULT_NODES
    rule: str = "trapezoid"

    def __post_init__(self):
        if not self.im_max > 0:
            raise ValueError("im_max must be positive")
        if self.n_nodes < 16:
            raise ValueError("n_nodes must be at least 16")
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; expected one of {RULES}")
        if self.rule == "trapezoid" and self.n_nodes % 2:
            raise ValueError("trapezoid rule needs an even node count")

    @cached_property
    def _nodes_weights(self):
        if self.rule == "trapezoid":
            h = 2.0 * self.im_max / self.n_nodes
            j = np.arange(-self.n_nodes // 2, self.n_nodes // 2)
            t = (j + 0.5) * h
            return t, np.full(t.shape, h)
        per = 16
        n_pan = max(1, self.n_nodes // (2 * per))
        first = min(0.5, self.im_max / n_pan)
        if n_pan == 1:
            edges = np.array([0.0, self.im_max])
        else:
            edges = np.concatenate([[0.0], np.geomspace(first, self.im_max, n_pan)])
        x, w = np.polynomial.legendre.leggauss(per)
        a, b = edges[:-1, None], edges[1:, None]
        tp = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
        wp = (0.5 * (b - a) * w).ravel()
        t = np.concatenate([-tp[::-1], tp])
        return t, np.concatenate([wp[::-1], wp])

    @property
    def t(self) -> np.ndarray:
        return self._nodes_weights[0]

    @property
    def weights(self) -> np.ndarray:
        return self._nodes_weights[1]

    @property
    def points(self) -> np.ndarray:
        return self.re + 1j * self.t

    def shifted(self, dre: float) -> "VerticalLine":
        return VerticalLine(self.re + dre, self.im_max, self.n_nodes, self.rule)

    def integrate(self, values) -> complex:
        """(1/2 pi) int values dt, i.e. (1/2 pi i) int ... ds along the line."""
        return complex(np.sum(self.weights * values) / (2.0 * np.pi))


@dataclass(frozen=True)
class SpectralFunction:
    """Values of a Mellin transform at the nodes of a vertical line."""

    line: VerticalLine
    values: np.ndarray
    strip: Strip | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.line.t.shape:
            raise ValueError("values must align with the line nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectral values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def points(self):
        return self.line.points

    def conjugate_symmetry_defect(self) -> float:
        """max |g(c+it) - conj g(c-it)| relative to max |g| (0 for real inputs)."""
        scale = np.max(np.abs(self.values)) or 1.0
        return float(np.max(np.abs(self.values - np.conj(self.values[::-1]))) / scale)

    def scaled(self, a) -> "SpectralFunction":
        return SpectralFunction(self.line, a * self.values, self.strip)


@dataclass(frozen=True)
class NormParams:
    k: int
    mu: float

    def __post_init__(self):
        if self.k < 0 or int(self.k) != self.k:
            raise ValueError("k must be a non-negative integer")
        d = self.mu - self.k - 2
        if not -1.0 < d < -0.5:
            raise ValueError(f"need -1 < mu - k - 2 < -1/2, got mu - k - 2 = {d}")


# ---------------------------------------------------------------------------
# physical-side quadrature in x = log r

X_MIN, X_MAX = -40.0, 40.0
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _safe_eval(h, r):
    with np.errstate(all="ignore"):
        v = np.asarray(h(r), dtype=complex)
    return np.where(np.isfinite(v), v, 0.0)


def _log_panels(x_lo, x_hi, width, breaks=()):
    edges = {x_lo, x_hi}
    edges.update(b for b in breaks if x_lo < b < x_hi)
    edges = sorted(edges)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil((b - a) / width))
        e = np.linspace(a, b, n + 1)
        lo, hi = e[:-1, None], e[1:, None]
        nodes.append((0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)).ravel())
        weights.append((0.5 * (hi - lo) * _GL_W).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


@dataclass
class _PhysicalRule:
    """Quadrature for int_0^inf r^(s-1) h(r) dr valid for a range of abscissae."""

    x: np.ndarray
    w: np.ndarray
    hx: np.ndarray
    head: tuple | None   # (r0, h(r0), beta): h ~ h(r0) (r/r0)^beta below r0
    tail: tuple | None

    def apply(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.empty(s.shape, dtype=complex)
        flat_s, flat_o = s.ravel(), out.ravel()
        chunk = max(1, 2_000_000 // max(1, self.x.size))
        for i in range(0, flat_s.size, chunk):
            ss = flat_s[i:i + chunk, None]
            flat_o[i:i + chunk] = np.exp(ss * self.x) @ (self.w * self.hx)
        if self.head is not None:
            r0, h0, beta = self.head
            if np.any(np.real(flat_s) + beta <= 0):
                raise DivergentTransform("abscissa left of the convergence strip (r -> 0)")
            flat_o += h0 * np.exp(flat_s * math.log(r0)) / (flat_s + beta)
        if self.tail is not None:
            r1, h1, beta = self.tail
            if np.any(np.real(flat_s) + beta >= 0):
                raise DivergentTransform("abscissa right of the convergence strip (r -> inf)")
            flat_o -= h1 * np.exp(flat_s * math.log(r1)) / (flat_s + beta)
        return out


def _power_fit(h, x0, dx):
    """Local exponent beta and value of h at r = e^x0 (power-law model)."""
    v0 = complex(_safe_eval(h, np.array([math.exp(x0)]))[0])
    v1 = complex(_safe_eval(h, np.array([math.exp(x0 + dx)]))[0])
    if v0 == 0 or v1 == 0:
        return v0, 0.0
    beta = math.log(abs(v1 / v0)) / dx
    return v0, beta


def physical_rule(h: Callable, width: float = 0.25, breakpoints: Sequence[float] = (),
                  x_range=(X_MIN, X_MAX), neg_tol: float = 1e-18) -> _PhysicalRule:
    """Build a reusable quadrature for the Mellin integral of ``h``.

    ``breakpoints`` are r-values where h is not smooth (panel edges go there).
    The x-range is trimmed to where |h| is not negligible.
    """
    lo, hi = x_range
    probe = np.arange(lo, hi + 1e-12, 0.25)
    mag = np.abs(_safe_eval(h, np.exp(probe)))
    if not np.any(mag > 0):
        return _PhysicalRule(np.zeros(1), np.zeros(1), np.zeros(1), None, None)
    # trim where |h| r^(+-12) is negligible relative to its peak
    wl = mag * np.exp(-12.0 * np.minimum(probe, 0))
    wr = mag * np.exp(12.0 * np.maximum(probe, 0))
    keep_l = np.nonzero(wl > neg_tol * wl.max())[0]
    keep_r = np.nonzero(wr > neg_tol * wr.max())[0]
    x_lo = probe[max(keep_l[0] - 1, 0)] if keep_l.size else lo
    x_hi = probe[min(keep_r[-1] + 1, probe.size - 1)] if keep_r.size else hi
    breaks = [math.log(b) for b in breakpoints if b > 0]
    x, w = _log_panels(x_lo, x_hi, width, breaks)
    hx = _safe_eval(h, np.exp(x)) * 1.0
    head = tail = None
    if x_lo <= lo + 1e-12 and mag[0] > 0:
        v0, beta = _power_fit(h, lo, 0.5)
        head = (math.exp(lo), v0, beta)
    if x_hi >= hi - 1e-12 and mag[-1] > 0:
        v1, beta = _power_fit(h, hi - 0.5, 0.5)
        tail = (math.exp(hi), complex(_safe_eval(h, np.array([math.exp(hi)]))[0]), beta)
    return _PhysicalRule(x, w, hx, head, tail)


def mellin_quad(h: Callable, s, breakpoints: Sequence[float] = (), width: float = 0.25):
    """h~(s) by quadrature at arbitrary complex points ``s`` (array)."""
    return physical_rule(h, width=width, breakpoints=breakpoints).apply(s)


# ---------------------------------------------------------------------------
# operations

def forward_mellin(h: Callable | None, line: VerticalLine, transform: Callable | None = None,
                   strip: Strip | None = None, breakpoints: Sequence[float] = ()) -> SpectralFunction:
    """Mellin transform of ``h`` on ``line``.

    With ``transform`` given the closed form is evaluated at the nodes; otherwise
    the transform is computed by quadrature.
    """
    if strip is not None and not strip.contains(line.re):
        raise DivergentTransform(f"line Re s = {line.re} outside strip "
                                 f"({strip.re_min}, {strip.re_max})")
    s = line.points
    if transform is not None:
        vals = np.asarray(transform(s), dtype=complex)
    else:
        if h is None:
            raise ValueError("need either h or its transform")
        vals = mellin_quad(h, s, breakpoints=breakpoints)
    return SpectralFunction(line, vals, strip)


def _check_tail(g: SpectralFunction, tail_tol: float | None):
    if tail_tol is None:
        return
    v = np.abs(g.values)
    peak = v.max()
    if peak > 0 and max(v[0], v[-1]) > tail_tol * peak:
        raise TailTooFat(f"|g| at |Im s| = {g.line.im_max} is {max(v[0], v[-1]) / peak:.1e} "
                         f"of its peak; enlarge im_max")


def inverse_mellin(g: SpectralFunction, r, tail_tol: float | None = TAIL_TOL):
    """h(r) = (1/2 pi) int r^(-c-it) g(c+it) dt; vectorized over ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    _check_tail(g, tail_tol)
    lr = np.log(r).ravel()
    wv = g.line.weights * g.values / (2.0 * np.pi)
    out = np.exp(-np.outer(lr, g.points)) @ wv
    return out.reshape(r.shape) if r.ndim else complex(out[0])


def parseval_norm(g: SpectralFunction, a: float) -> float:
    """int_0^inf |h|^2 r^(2a-1) dr evaluated spectrally on Re s = a.

    Returns the weighted integral itself (not its square root).
    """
    if abs(g.line.re - a) > 1e-12:
        raise LineMismatch(f"function lives on Re s = {g.line.re}, Parseval needs {a}")
    return float(np.sum(g.line.weights * np.abs(g.values) ** 2) / (2.0 * np.pi))


def mellin_convolve(h: SpectralFunction, g: SpectralFunction, r, tail_tol=TAIL_TOL):
    """int_0^inf h(r/t) g(t) dt/t from the product of transforms."""
    if h.line != g.line:
        raise LineMismatch("both transforms must sit on the same line")
    prod = SpectralFunction(h.line, h.values * g.values)
    return inverse_mellin(prod, r, tail_tol=tail_tol)


def direct_convolution(h: Callable, g: Callable, r: float, breakpoints=()) -> complex:
    """Physical-side oracle for :func:`mellin_convolve` (quadrature in log t)."""
    rule_x, rule_w = _log_panels(X_MIN, X_MAX, 0.1, [math.log(b) for b in breakpoints])
    t = np.exp(rule_x)
    vals = _safe_eval(h, r / t) * _safe_eval(g, t)
    return complex(np.sum(rule_w * vals))


def derivative_transform(g: SpectralFunction, k: int, target: Strip | None = None) -> SpectralFunction:
    """Transform of h^(k): (-1)^k (s-1)...(s-k) h~(s-k).

    The result lives on the line shifted right by k (same node ordinates).
    """
    if k < 0:
        raise ValueError("order must be non-negative")
    if g.strip is not None and not g.strip.contains(g.line.re):
        raise StripViolation("input line outside its own validity strip")
    line = g.line.shifted(k)
    s = line.points
    fac = np.ones_like(s)
    for j in range(1, k + 1):
        fac = fac * (s - j)
    strip = None if g.strip is None else Strip(g.strip.re_min + k, g.strip.re_max + k)
    if target is not None and not target.contains(line.re):
        raise StripViolation(f"shifted line Re s = {line.re} outside requested strip")
    return SpectralFunction(line, (-1) ** k * fac * g.values, strip)


def euler_derivative_transform(g: SpectralFunction, k: int) -> SpectralFunction:
    """Transform of (r d/dr)^k h: (-s)^k h~(s), on the same line."""
    if k < 0:
        raise ValueError("order must be non-negative")
    return SpectralFunction(g.line, (-g.points) ** k * g.values, g.strip)


# ---------------------------------------------------------------------------
# norms

def half_norm_spectral(g: SpectralFunction, params: NormParams, order: int | None = None) -> float:
    """sqrt( int |h~(s)|^2 (1 + |s|)^(2m+1) dt ) on Re s = mu - m, m = params.k.

    ``order`` overrides the smoothness index m (the line must then be mu - m).
    """
    m = params.k if order is None else order
    want = params.mu - m
    if abs(g.line.re - want) > 1e-12:
        raise LineMismatch(f"half-norm of order {m} needs Re s = {want}, got {g.line.re}")
    w = (1.0 + np.abs(g.points)) ** (2 * m + 1)
    return math.sqrt(float(np.sum(g.line.weights * w * np.abs(g.values) ** 2)))


def half_norm_physical(h: Callable, params: NormParams, derivatives: Sequence[Callable] | None = None,
                       n_u: int = 48, width: float = 0.1, x_range=(-30.0, 12.0)) -> float:
    """Physical-side half-integer norm on (0, inf).

    Sum over l <= k of int r^(2(mu-k+l)-1) |h^(l)|^2 dr plus the seminorm
    int r^(2mu) int_0^r |h^(k)(r+rho) - h^(k)(r)|^2 rho^-2 drho dr, the inner
    integral taken with rho = r u, u in (0, 1).  Derivatives default to central
    differences; :class:`GridTooCoarse` is raised when their error estimate
    exceeds 10% of the result.
    """
    k, mu = params.k, params.mu
    if derivatives is None:
        derivs = [h] + [_fd_derivative(h, l) for l in range(1, k + 1)]
    else:
        derivs = list(derivatives)
        if len(derivs) < k + 1:
            raise ValueError(f"need h and its first {k} derivatives")
    x, w = _log_panels(*x_range, width)
    r = np.exp(x)
    total = 0.0
    for l in range(k + 1):
        v = _safe_eval(derivs[l], r)
        total += float(np.sum(w * r ** (2 * (mu - k + l)) * np.abs(v) ** 2))
    ux, uw = np.polynomial.legendre.leggauss(n_u)
    u = 0.5 * (ux + 1.0)
    uw = 0.5 * uw
    hk = derivs[k]
    base = _safe_eval(hk, r)
    inner = np.zeros_like(r)
    for ui, wi in zip(u, uw):
        d = _safe_eval(hk, r * (1.0 + ui)) - base
        inner += wi * np.abs(d) ** 2 / ui ** 2
    total += float(np.sum(w * r ** (2 * mu) * inner))
    value = math.sqrt(total)
    if derivatives is None and k > 0:
        coarse = half_norm_physical(h, params, [h] + [_fd_derivative(h, l, rel=4e-3)
                                                      for l in range(1, k + 1)],
                                    n_u=n_u, width=width, x_range=x_range)
        if value > 0 and abs(coarse - value) > 0.1 * value:
            raise GridTooCoarse("finite-difference derivatives unresolved")
    return value


def _fd_derivative(h, order, rel=1e-3):
    """Central-difference derivative with step proportional to r."""
    if order == 0:
        return h

    def d(r):
        r = np.asarray(r, dtype=float)
        step = rel * r
        lower = _fd_derivative(h, order - 1, rel)
        return (lower(r + step) - lower(r - step)) / (2 * step)
    return d


def theta_sobolev_sq(vals: np.ndarray, theta: np.ndarray, order: int) -> np.ndarray:
    """||v(r, .)||^2 in H^order(-pi, pi) for each row of ``vals`` (grid r x theta)."""
    total = np.zeros(vals.shape[0])
    cur = vals
    for j in range(order + 1):
        total += np.trapezoid(np.abs(cur) ** 2, theta, axis=1)
        if j < order:
            cur = np.gradient(cur, theta, axis=1, edge_order=2)
    return total


def weighted_norm_polar(p: np.ndarray, r: np.ndarray, theta: np.ndarray, params_k: int,
                        mu: float, check: bool = True) -> float:
    """Norm ||p||_{k,mu} of a polar grid field (rows r, columns theta).

    int r^(2(mu-k)+1) sum_l ||(r d/dr)^l p||^2_{H^(k-l)(-pi,pi)} dr with finite
    differences in (log r, theta).
    """
    p = np.asarray(p)
    if p.shape != (r.size, theta.size):
        raise ValueError("grid shape mismatch")
    lr = np.log(r)
    total_r = np.zeros(r.size)
    cur = p
    for l in range(params_k + 1):
        total_r += theta_sobolev_sq(cur, theta, params_k - l)
        if l < params_k:
            cur = np.gradient(cur, lr, axis=0, edge_order=2)
    value = math.sqrt(float(np.trapezoid(r ** (2 * (mu - params_k) + 1) * total_r, r)))
    if check and r.size >= 9 and theta.size >= 9:
        coarse = weighted_norm_polar(p[::2, ::2], r[::2], theta[::2], params_k, mu, check=False)
        if value > 0 and abs(coarse - value) > 0.1 * value:
            raise GridTooCoarse(f"polar norm changes by {abs(coarse - value) / value:.1%} "
                                "on the half grid")
    return value


def weighted_norm_cartesian(p: np.ndarray, r: np.ndarray, theta: np.ndarray, params_k: int,
                            mu: float, check: bool = True) -> float:
    """Norm of type sum_{|a|<=k} int |x|^(2(mu-k+|a|)) |D^a p|^2 dx on a polar grid.

    Cartesian derivatives are formed by the chain rule
    d1 = cos t d_r - sin t / r d_t, d2 = sin t d_r + cos t / r d_t,
    applied numerically on the grid.
    """
    p = np.asarray(p)
    R, T = np.meshgrid(r, theta, indexing="ij")
    c, s = np.cos(T), np.sin(T)

    def d_r(a):
        return np.gradient(a, r, axis=0, edge_order=2)

    def d_t(a):
        return np.gradient(a, theta, axis=1, edge_order=2)

    def d1(a):
        return c * d_r(a) - s / R * d_t(a)

    def d2(a):
        return s * d_r(a) + c / R * d_t(a)

    layer = [p]
    integrand = np.abs(p) ** 2 * R ** (2 * (mu - params_k))
    for order in range(1, params_k + 1):
        # all multi-indices of this order: d1 applied to the previous layer's
        # first entry and d2 to every entry
        nxt = [d1(layer[0])] + [d2(a) for a in layer]
        layer = nxt
        wgt = R ** (2 * (mu - params_k + order))
        for a in layer:
            integrand = integrand + wgt * np.abs(a) ** 2
    inner = np.trapezoid(integrand, theta, axis=1)
    value = math.sqrt(float(np.trapezoid(inner * r, r)))
    if check and r.size >= 9 and theta.size >= 9:
        coarse = weighted_norm_cartesian(p[::2, ::2], r[::2], theta[::2], params_k, mu, check=False)
        if value > 0 and abs(coarse - value) > 0.1 * value:
            raise GridTooCoarse("cartesian norm unresolved on the half grid")
    return value

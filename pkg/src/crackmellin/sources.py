"""Source terms f(r) on the slit, r = -x1 > 0, with zero mean."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

from .errors import (DegenerateFamily, FormatError, IncompatibleSource, NonIntegrable,
                     NonMonotoneGrid, TailFitFailure)
from .mellin import mellin_quad, physical_rule
from .special import Strip, loggamma

COMPAT_REL_TOL = 1e-8


@dataclass(frozen=True)
class SourceTerm:
    """Datum f with its Mellin transform.

    ``eval`` maps r to f(r); ``mellin`` maps complex s to f~(s) (vectorized) and
    is valid on ``strip``.
    """

    eval: Callable
    mellin: Callable
    strip: Strip
    family_params: dict = field(default_factory=dict)
    provenance: str = "closed_form"
    breakpoints: tuple = ()

    def __call__(self, r):
        return self.eval(r)

    def scaled(self, a: float) -> "SourceTerm":
        fe, fm = self.eval, self.mellin
        params = dict(self.family_params, scale=a * self.family_params.get("scale", 1.0))
        return SourceTerm(lambda r: a * fe(r), lambda s: a * fm(s), self.strip, params,
                          self.provenance, self.breakpoints)

    def __add__(self, other: "SourceTerm") -> "SourceTerm":
        fe, fm, ge, gm = self.eval, self.mellin, other.eval, other.mellin
        strip = Strip(max(self.strip.re_min, other.strip.re_min),
                      min(self.strip.re_max, other.strip.re_max))
        return SourceTerm(lambda r: fe(r) + ge(r), lambda s: fm(s) + gm(s), strip,
                          {"sum": [self.family_params, other.family_params]},
                          "closed_form" if self.provenance == other.provenance == "closed_form"
                          else "sampled", tuple(sorted(set(self.breakpoints + other.breakpoints))))


def zero_source() -> SourceTerm:
    return SourceTerm(lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                      lambda s: np.zeros_like(np.asarray(s, dtype=complex)),
                      Strip(-np.inf, np.inf), {"zero": True})


def make_gamma_pair(a: float, b: float, c: float, d: float) -> SourceTerm:
    """f(r) = A r^(a-1) e^(-b r) - B r^(c-1) e^(-d r) normalized to zero mean.

    A = b^a / Gamma(a) and B = d^c / Gamma(c), so each term integrates to 1.
    """
    for name, v in (("a", a), ("b", b), ("c", c), ("d", d)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    if (a, b) == (c, d):
        raise DegenerateFamily("both terms coincide; f vanishes identically")
    log_a = a * math.log(b) - float(gammaln(a))
    log_b = c * math.log(d) - float(gammaln(c))

    def f(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lr = np.log(r)
            t1 = np.exp(log_a + (a - 1) * lr - b * r)
            t2 = np.exp(log_b + (c - 1) * lr - d * r)
        return t1 - t2

    def ft(s):
        s = np.asarray(s, dtype=complex)
        s1, s2 = s + a - 1, s + c - 1
        t1 = np.exp(log_a + loggamma(s1) - s1 * math.log(b))
        t2 = np.exp(log_b + loggamma(s2) - s2 * math.log(d))
        return t1 - t2

    return SourceTerm(f, ft, Strip(1.0 - min(a, c), np.inf),
                      {"a": a, "b": b, "c": c, "d": d,
                       "A": math.exp(log_a), "B": math.exp(log_b)})


def _integral(f: SourceTerm):
    """(int f dr, int |f| dr) by the log-r panel rule (s = 1)."""
    rule = physical_rule(f.eval, breakpoints=f.breakpoints)
    mean = complex(rule.apply(np.array([1.0]))[0]).real
    abs_rule = physical_rule(lambda r: np.abs(f.eval(r)), breakpoints=f.breakpoints)
    l1 = complex(abs_rule.apply(np.array([1.0]))[0]).real
    return mean, l1


def validate_compatibility(f: SourceTerm, rel_tol: float = COMPAT_REL_TOL,
                           raise_on_fail: bool = False) -> float:
    """Return int_0^inf f dr; optionally reject if it exceeds rel_tol * ||f||_L1."""
    try:
        mean, l1 = _integral(f)
    except Exception as exc:  # divergent head/tail model
        raise NonIntegrable(str(exc)) from exc
    if not (math.isfinite(mean) and math.isfinite(l1)):
        raise NonIntegrable("integral of f is not finite")
    if raise_on_fail and abs(mean) > rel_tol * max(l1, 1e-300):
        raise IncompatibleSource(f"int f dr = {mean:.3e} exceeds {rel_tol:g} * ||f||_1 "
                                 f"= {rel_tol * l1:.3e}; a zero-mean datum is required")
    return mean


def _read_csv(path: Path):
    rows = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(str(exc)) from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise FormatError(f"{path}: no data")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if header != ["r", "f"]:
        raise FormatError(f"{path}: header must be 'r,f', got {','.join(header)}")
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 2:
            raise FormatError(f"{path}: row {lineno} has {len(row)} fields")
        try:
            rows.append((float(row[0]), float(row[1])))
        except ValueError as exc:
            raise FormatError(f"{path}: row {lineno}: {exc}") from exc
    if len(rows) < 4:
        raise FormatError(f"{path}: need at least 4 samples")
    arr = np.array(rows)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: non-finite values")
    return arr[:, 0], arr[:, 1]


def load_sampled(path, r_range: tuple | None = None, tail_warn: float = 0.01) -> SourceTerm:
    """SourceTerm from a CSV with columns ``r,f``.

    Inside the sampled range f is the monotone cubic (PCHIP) interpolant; below
    the first sample it continues linearly with the interpolant's end slope;
    beyond the last sample it follows an exponential C e^(-gamma r) fitted on
    the last decade of samples.
    """
    path = Path(path)
    r, fv = _read_csv(path)
    if np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise NonMonotoneGrid(f"{path}: r must be positive and strictly increasing")
    if r_range is not None and (r[0] > r_range[0] or r[-1] < r_range[1]):
        raise FormatError(f"{path}: samples cover [{r[0]}, {r[-1]}], run needs {r_range}")
    interp = PchipInterpolator(r, fv, extrapolate=False)
    sel = r >= r[-1] / 10.0
    tr, tf = r[sel], fv[sel]
    nz = tf != 0
    if nz.sum() < 3 or np.any(np.sign(tf[nz]) != np.sign(tf[nz][-1])):
        raise TailFitFailure("last decade must keep one sign for an exponential tail fit")
    slope, icpt = np.polyfit(tr[nz], np.log(np.abs(tf[nz])), 1)
    gam = -slope
    if not gam > 0:
        raise TailFitFailure(f"fitted tail rate {gam:.3g} is not positive")
    c_tail = np.sign(tf[nz][-1]) * math.exp(icpt)
    r0, r1, f0 = r[0], r[-1], fv[0]
    f1 = float(interp.derivative()(r0))

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < r0, f0 + f1 * (x - r0), 0.0)
        inside = (x >= r0) & (x <= r1)
        out = np.where(inside, np.nan_to_num(interp(np.clip(x, r0, r1))), out)
        with np.errstate(under="ignore", over="ignore"):
            out = np.where(x > r1, c_tail * np.exp(-gam * x), out)
        return out

    rule = physical_rule(f, breakpoints=(r0, r1), width=0.05)
    tail_rule = physical_rule(lambda x: np.where(np.asarray(x) > r1, f(x), 0.0),
                              breakpoints=(r1,), width=0.05)

    def ft(s):
        return rule.apply(s)

    src = SourceTerm(f, ft, Strip(0.0, np.inf),
                     {"path": str(path), "n": int(r.size), "tail_rate": float(gam),
                      "tail_coeff": float(c_tail)}, "sampled", (r0, r1))
    # how much does the extrapolated tail carry at s = 2
    total = abs(complex(ft(np.array([2.0]))[0]))
    tail = abs(complex(tail_rule.apply(np.array([2.0]))[0]))
    src.family_params["tail_fraction"] = tail / total if total > 0 else 0.0
    if total > 0 and tail / total > tail_warn:
        src.family_params["warning"] = f"exponential tail carries {tail / total:.1%} of f~(2)"
    return src


def closed_form_vs_quadrature(f: SourceTerm, s) -> float:
    """max relative gap between f.mellin and direct quadrature at points s."""
    s = np.asarray(s, dtype=complex)
    a = f.mellin(s)
    b = mellin_quad(f.eval, s, breakpoints=f.breakpoints)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(a)))

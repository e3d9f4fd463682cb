"""Release acceptance criteria, one test per criterion.

Each test records a single PASS/FAIL line (shown in the pytest summary under
"acceptance criteria") and then asserts it.  Sub-results that explain a line
but do not decide it are recorded as "info".  Tolerances are pinned below.
"""
import json
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import exp1

from crackmellin import bounds as B
from crackmellin import cli
from crackmellin import special as sp
from crackmellin import verify as V
from crackmellin.errors import ContourPoleClash
from crackmellin.mellin import (SpectralFunction, VerticalLine, derivative_transform,
                                direct_convolution, euler_derivative_transform, forward_mellin,
                                inverse_mellin, mellin_convolve, parseval_norm)
from crackmellin.solver import (SolverParams, q_split, q_tilde_contour, q_tilde_line, q_tilde_pv,
                                solve)
from crackmellin.sources import make_gamma_pair

# pinned tolerances
TOL_K_UNIT = 1e-10
TOL_K_FUNCTIONAL = 1e-8
TOL_D0 = 1e-8
TOL_MELLIN = 1e-6
TOL_DIFF_EQ = 1e-6
TOL_ROUTES = 1e-6
TOL_EPS = 1e-8
TOL_Q1_FUNCTION = 1e-6
TOL_Q1_VALUE = 1e-8
TOL_POLY = 1e-12
TOL_NORM_DOUBLING = 0.10
TOL_RATE = 0.10
EPS_SET = (0.1, 0.25, 0.4)

F = make_gamma_pair(2, 1, 1, 1)
P = SolverParams(kappa2=1.0, theta=0.4)
G = sp.gamma_array


def record(log, n, ok, text):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:2d}: {text}"
    print(line)
    log.append(line)


def info(log, n, text):
    line = f"info  criterion {n:2d}: {text}"
    print(line)
    log.append(line)


@pytest.fixture(scope="module")
def bundle():
    return solve(F, P)


# ---------------------------------------------------------------- 1

def test_criterion_01_special_functions(acceptance_log):
    unit = max(abs(sp.k_product(0.5).value - 1), abs(sp.k_product(0.0).value - 1))
    re = np.linspace(-0.45, 0.95, 10)
    im = np.array([-20.0, -3.0, 0.7, 5.0, 30.0])
    lam = (re[:, None] + 1j * im[None, :]).ravel()
    lhs = sp.k_array(lam + 1)
    rhs = math.pi * sp.omega_array(lam) * sp.k_array(lam)
    func = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
    d0_res = 0.0
    for kappa0 in (0.5, 1.0, 2.0, 10.0):
        for z in (0.25 + 3j, -0.3 + 0.7j, 0.9 - 12j, 0.1):
            a, b = sp.d0(z + 1, kappa0).value, sp.d0(z, kappa0).value
            d0_res = max(d0_res, abs(kappa0 * a + sp.omega(z).value * b) / abs(b))
    ok = unit <= TOL_K_UNIT and func <= TOL_K_FUNCTIONAL and d0_res <= TOL_D0
    record(acceptance_log, 1, ok,
           f"|K(1/2)-1|,|K(0)-1| {unit:.1e} (tol {TOL_K_UNIT:.0e}); functional relation "
           f"{func:.1e} on {lam.size} pts (tol {TOL_K_FUNCTIONAL:.0e}); d0 residual {d0_res:.1e} "
           f"(tol {TOL_D0:.0e})")
    assert ok


# ---------------------------------------------------------------- 2

GAMMA_PAIRS = [
    ("e^-r", lambda r: np.exp(-r), G),
    ("r e^-r", lambda r: r * np.exp(-r), lambda s: G(s + 1)),
    ("(r-1) e^-r", lambda r: (r - 1) * np.exp(-r), lambda s: (s - 1) * G(s)),
    ("r^2 e^-r", lambda r: r * r * np.exp(-r), lambda s: G(s + 2)),
]


def test_criterion_02_mellin_layer(acceptance_log):
    r = np.logspace(-2, 2, 41)
    rt, pw = 0.0, 0.0
    for _, h, t in GAMMA_PAIRS:
        g = forward_mellin(None, VerticalLine(1.5), transform=t)
        exact = h(r)
        err = np.abs(np.real(inverse_mellin(g, r, tail_tol=None)) - exact)
        rt = max(rt, float(np.max(err) / np.max(np.abs(exact))))
        near = (r <= 20) & (np.abs(exact) > 1e-3 * np.max(np.abs(exact)))
        pw = max(pw, float(np.max(err[near] / np.abs(exact[near]))))

    pars = 0.0
    for a in (0.5, 1.0):
        for _, h, t in GAMMA_PAIRS:
            oracle = quad(lambda x: h(x) ** 2 * x ** (2 * a - 1), 0, np.inf, limit=200)[0]
            got = parseval_norm(forward_mellin(None, VerticalLine(a), transform=t), a)
            pars = max(pars, abs(got - oracle) / oracle)
    ind = forward_mellin(None, VerticalLine(1.0, 1e7, 2048, "gauss-legendre-panels"),
                         transform=lambda s: 1 / s)
    pars = max(pars, abs(parseval_norm(ind, 1.0) - 0.5) / 0.5)

    line = VerticalLine(0.5)
    he = forward_mellin(None, line, transform=G)
    hi = forward_mellin(None, line, transform=lambda s: 1 / s)
    direct = direct_convolution(lambda x: np.exp(-x), lambda x: (x < 1) * 1.0, 1.0, breakpoints=[1.0])
    conv = max(abs(direct - exp1(1.0)),
               abs(mellin_convolve(he, hi, 1.0, tail_tol=None) - direct),
               abs(mellin_convolve(he, he, 1.0)
                   - direct_convolution(lambda x: np.exp(-x), lambda x: np.exp(-x), 1.0)))

    g = forward_mellin(None, VerticalLine(1.5), transform=G)
    d = derivative_transform(g, 1)
    deriv = float(np.max(np.abs(d.values + G(d.points))))
    deriv = max(deriv, abs(inverse_mellin(d, 0.7) + math.exp(-0.7)))
    el = VerticalLine(1.5, 15.0, 128)
    e = euler_derivative_transform(forward_mellin(None, el, transform=G), 2)
    qd = forward_mellin(lambda x: (x * x - x) * np.exp(-x), el)
    deriv = max(deriv, float(np.max(np.abs(e.values - qd.values)) / np.max(np.abs(qd.values))))

    ok = max(rt, pars, conv, deriv) <= TOL_MELLIN
    record(acceptance_log, 2, ok,
           f"roundtrip {rt:.1e} (rel to sup|h| on [1e-2,1e2]); Parseval {pars:.1e}; "
           f"convolution {conv:.1e}; derivative rules {deriv:.1e} (tol {TOL_MELLIN:.0e})")
    info(acceptance_log, 2, f"pointwise relative roundtrip on r <= 20 (|h| >= 1e-3 sup): {pw:.1e}")
    assert ok


# ---------------------------------------------------------------- 3

def test_criterion_03_spectral_solution(acceptance_log):
    pts = [-0.75 + 1j * t for t in np.linspace(-6, 6, 20)]
    de, routes, eps_dev, skipped = 0.0, 0.0, 0.0, 0
    for lam in pts:
        q0 = q_tilde_pv(lam, F, P)
        q1 = q_tilde_pv(lam + 1, F, P)
        lhs = P.kappa0 * q1 * sp.tan_pi(lam + 1) + sp.omega(lam).value * q0 * sp.tan_pi(lam)
        rhs = -F.mellin(np.array([lam + 2]))[0] / (lam + 1)
        de = max(de, abs(lhs - rhs) / abs(rhs))
        ct = q_tilde_contour(lam, F, P)
        a, b = q_split(lam, F, P)
        routes = max(routes, abs(q0 - ct) / abs(q0), abs(q0 - (a + b)) / abs(q0),
                     abs(ct - (a + b)) / abs(q0))
        vals = []
        for eps in EPS_SET:
            try:
                vals.append(q_tilde_contour(lam, F, P, eps=eps))
            except ContourPoleClash:
                skipped += 1
        eps_dev = max(eps_dev, max(abs(v - vals[0]) for v in vals) / abs(vals[0]))
    ok = de <= TOL_DIFF_EQ and routes <= TOL_ROUTES and eps_dev <= TOL_EPS
    record(acceptance_log, 3, ok,
           f"difference equation {de:.1e} (tol {TOL_DIFF_EQ:.0e}); PV/contour/split {routes:.1e} "
           f"(tol {TOL_ROUTES:.0e}); eps spread {eps_dev:.1e} (tol {TOL_EPS:.0e})")
    info(acceptance_log, 3, f"{skipped} (point, eps) pairs skipped: kernel pole inside the eps half circle")
    assert ok


# ---------------------------------------------------------------- 4

def test_criterion_04_q1_prime_oracle(acceptance_log):
    r = np.array([0.1, 0.5, 1.0, 2.0, 5.0])
    q1 = q_tilde_line(F, P, part="q1")
    d = SpectralFunction(q1.line, -q1.points * q1.values)
    q1p = np.real(inverse_mellin(d, r, tail_tol=None)) / r
    tail = np.array([quad(lambda t: float(F(np.array([t]))[0]), x, np.inf)[0] for x in r])
    target = -tail / P.kappa0
    fn_err = float(np.max(np.abs(q1p - target)))
    at1 = float(q1p[2])
    val_err = abs(at1 - (-math.exp(-1) / 2))
    ok = fn_err <= TOL_Q1_FUNCTION and val_err <= TOL_Q1_VALUE
    record(acceptance_log, 4, ok,
           f"q1' vs -(1/kappa0) int_r^inf f: {fn_err:.1e} (tol {TOL_Q1_FUNCTION:.0e}); "
           f"q1'(1) = {at1:.10f} vs -e^-1/2 = {-math.exp(-1) / 2:.10f} (tol {TOL_Q1_VALUE:.0e})")
    # the package solves -q'' = f + coupling, so q1' = +int_r^inf f; ratio to the target is -kappa0
    info(acceptance_log, 4, f"q1' vs +int_r^inf f: {float(np.max(np.abs(q1p - tail))):.1e}; "
         f"q1'(1) - e^-1 = {at1 - math.exp(-1):.1e}")
    assert ok


# ---------------------------------------------------------------- 5

def test_criterion_05_physical_residuals(acceptance_log, bundle):
    lap = V.laplace_residual(bundle)
    bc = V.bc_residuals(bundle)
    ode = V.ode_residual(bundle, sign_audit=True)
    dt = ode.details
    ok_lap = lap.rel <= V.LAPLACE_TOL and lap.order >= V.ORDER_MIN
    ok_bc = bc.rel <= V.TRACE_TOL
    ok_ode = dt["audit_rel_plus"] <= V.ODE_TOL
    ok_audit = dt["audit_ratio"] >= V.AUDIT_FACTOR
    ok = ok_lap and ok_bc and ok_ode and ok_audit
    record(acceptance_log, 5, ok,
           f"Laplace rel {lap.rel:.1e} order {lap.order:.2f} (tol {V.LAPLACE_TOL:.0e}, order >= "
           f"{V.ORDER_MIN}); traces {bc.rel:.1e} (tol {V.TRACE_TOL:.0e}); ODE {dt['audit_rel_plus']:.1e} "
           f"(tol {V.ODE_TOL:.0e}); sign audit ratio {dt['audit_ratio']:.3g} (need >= {V.AUDIT_FACTOR:g})")
    info(acceptance_log, 5, f"sub-results: Laplace {ok_lap}, traces {ok_bc}, ODE {ok_ode}, "
         f"audit {ok_audit}; residual-minimizing sign {dt['audit_minimizer']}")
    assert ok


# ---------------------------------------------------------------- 6

def test_criterion_06_polynomial_oracle(acceptance_log):
    reps = V.polynomial_oracle_check(degrees=range(5), n_points=100, tol=TOL_POLY)
    worst = max(r.rel for r in reps)
    ok = len(reps) == 25 and all(r.passed for r in reps)
    record(acceptance_log, 6, ok,
           f"{len(reps)} residual reports, degrees 0-4, 100 random points each; worst rel "
           f"{worst:.1e} (tol {TOL_POLY:.0e})")
    assert ok


# ---------------------------------------------------------------- 7

def test_criterion_07_tip_condition(acceptance_log, bundle):
    tip, _ = V.tip_and_decay_checks(bundle, P, r_tip=(1e-3, 1e-2))
    slope, target = tip.details["slope"], tip.details["target"]
    ok = bool(tip.passed)
    record(acceptance_log, 7, ok,
           f"log-log slope of |q'| on [1e-3, 1e-2] = {slope:.3f} >= alpha - 1 - 0.1 = {target:.3f} "
           f"(alpha {P.alpha:.2f})")
    assert ok


# ---------------------------------------------------------------- 8

FAMILY = [(1.5, 1, 1, 1), (2, 1, 1, 1), (3, 1, 1, 1), (2, 1, 2, 2), (1.5, 2, 1, 1)]


def test_criterion_08_norm_estimate(acceptance_log):
    a = V.norm_estimate_report(F, P).ratio
    b = V.norm_estimate_report(F, P, n_nodes=2 * P.n_nodes).ratio
    drift = abs(a - b) / a
    fam = [V.norm_estimate_report(make_gamma_pair(*p), P).ratio for p in FAMILY]
    ok = math.isfinite(a) and drift <= TOL_NORM_DOUBLING and max(fam) <= V.NORM_RATIO_BOUND
    record(acceptance_log, 8, ok,
           f"ratio {a:.4f}, grid-doubling drift {drift:.1e} (tol {TOL_NORM_DOUBLING:.0%}); family max "
           f"{max(fam):.3f} <= frozen bound {V.NORM_RATIO_BOUND}")
    assert ok


# ---------------------------------------------------------------- 9

def test_criterion_09_bounds_lab(acceptance_log):
    rng = np.random.default_rng(2024)
    partition = True
    for M in (1.0, 5.0, 20.0):
        e = rng.uniform(-10 * M, 10 * M, 10 ** 6)
        t = rng.uniform(-10 * M, 10 * M, 10 ** 6)
        count = sum(m.astype(np.int8) for m in B.region_masks(e, t, M))
        partition &= bool(np.all(count == 1))
    checks = [B.check_phi_master_bound(0.25, 0.4, 5.0)] + B.check_lemma_bounds(0.25, 0.4, 5.0)
    bounds_ok = all(c.passed and math.isfinite(c.C) and c.violations == 0 for c in checks)
    rates = {f"{c.name}:{k}": v for c in checks for k, v in c.rates.items()}
    rates_ok = all(v["ok"] for v in rates.values())
    g2 = B.check_g2_bound(0.4, 0.3, 2.0)
    ok = partition and bounds_ok and rates_ok and g2.passed
    worst_alg = max((abs(v["measured"] - v["claimed"]) / v["claimed"] for k, v in rates.items()
                     if "algebraic" in k), default=0.0)
    worst_exp = min(v["measured"] / v["claimed"] for k, v in rates.items() if "algebraic" not in k)
    record(acceptance_log, 9, ok,
           f"partition {partition} (3 x 1e6 points); master C {checks[0].C:.3g} and 4 lemma constants "
           f"finite, 0 violations; algebraic exponent within {worst_alg:.1%} of 1+theta; exponential "
           f"rates >= {worst_exp:.2f} x claimed (need >= {1 - TOL_RATE:.2f}); G2 C {g2.C:.3g}, slopes "
           f"{g2.slope_small:.3f} / {g2.slope_large:.3f} (sigma {g2.sigma})")
    two_sided = {k: round(v["measured"] / v["claimed"], 2) for k, v in rates.items()
                 if "algebraic" not in k and abs(v["measured"] - v["claimed"]) > TOL_RATE * v["claimed"]}
    info(acceptance_log, 9, f"exponential rates more than 10% faster than claimed (bounds not sharp): "
         f"{two_sided}")
    assert ok


# ---------------------------------------------------------------- 10

def test_criterion_10_determinism_and_validation(acceptance_log, tmp_path, capsys):
    small = ["--n_r", "24", "--n_theta", "9"]
    codes = [cli.main(["solve", "--out", str(tmp_path / d), *small]) for d in ("a", "b")]
    names = json.loads((tmp_path / "a" / "manifest.json").read_text())["files"]
    identical = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
                    for n in list(names) + ["manifest.json"])
    capsys.readouterr()
    rejected = {}
    for key, val, text in (("mu", "3", "-1 < mu - k - 2 < -1/2"),
                           ("vartheta", "0.1", "(nu - 1)/2 < theta < nu/2")):
        code = cli.main(["solve", "--out", str(tmp_path / "bad"), f"--{key}", val])
        rejected[key] = code == 2 and text in capsys.readouterr().err
    ok = codes == [0, 0] and identical and all(rejected.values())
    record(acceptance_log, 10, ok,
           f"re-runs byte-identical over {len(names) + 1} files: {identical}; window violations "
           f"rejected naming the inequality: {rejected}")
    assert ok

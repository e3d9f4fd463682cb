import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crackmellin import bounds as B
from crackmellin.errors import DegenerateError, PoleError
from crackmellin.solver import SolverParams, q_tilde_line, _inverse_rows
from crackmellin.sources import make_gamma_pair, zero_source

P = SolverParams(theta=0.4)
F = make_gamma_pair(2, 1, 1, 1)


@pytest.fixture(scope="module")
def g2_check():
    return B.check_g2_bound(0.4, 0.3, 2.0)


# ---------------------------------------------------------------- Phi

def test_phi_reference_value():
    assert abs(B.phi(0.5, 0.5) - (-0.5j)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.3, 1.0), st.floats(-30, 30), st.floats(-30, 30))
def test_phi_conjugation(sigma, tau, eta):
    s, z = complex(sigma, tau), complex(0.4, eta)
    a = B.phi(s.conjugate(), z.conjugate())
    b = B.phi(s, z)
    assert abs(a + b.conjugate()) <= 1e-10 * max(abs(b), 1e-300)


def test_phi_decay_in_eta():
    vals = [abs(B.phi(0.25, 0.4 + 1j * e)) for e in (5, 10, 15)]
    rates = [-math.log(vals[i + 1] / vals[i]) / 5 for i in range(2)]
    assert all(r >= 0.9 * math.pi for r in rates)


def test_phi_pole():
    # sin(pi zeta) vanishes at integer zeta
    with pytest.raises(PoleError):
        B.phi(1.0, 1.0)


def test_phi_window():
    w = B.phi_window(0.4)
    assert w.contains(0.25) and not w.contains(1.2)
    with pytest.raises(DegenerateError):
        B.phi_window(1.5)


# ---------------------------------------------------------------- regions

@pytest.mark.parametrize("eta, tau, label", [(0, 0, "S0"), (20, 0, "S1"), (-1, 20, "S2pp")])
def test_classify_examples(eta, tau, label):
    assert B.classify(eta, tau, 5) == label


@pytest.mark.parametrize("M", [1, 5, 20])
def test_partition_fuzz(M):
    rng = np.random.default_rng(M)
    e = rng.uniform(-10 * M, 10 * M, 10 ** 6)
    t = rng.uniform(-10 * M, 10 * M, 10 ** 6)
    count = sum(m.astype(np.int8) for m in B.region_masks(e, t, M))
    assert count.min() == 1 and count.max() == 1


@settings(max_examples=200, deadline=None)
@given(st.floats(-200, 200), st.floats(-200, 200), st.sampled_from([1.0, 5.0, 20.0]))
def test_classify_total(eta, tau, M):
    assert B.classify(eta, tau, M) in B.LABELS


def test_classify_boundary_points():
    # closed inequalities: points on region edges still receive one label
    for M in (1, 5):
        for eta, tau in [(3 * M, 2 * M), (-M - 2 * M, 2 * M), (0, 2 * M), (-3 * M, -2 * M)]:
            assert B.classify(eta, tau, M) in B.LABELS


def test_cone_examples():
    c = B.cone_inequalities(-3, 2)
    assert bool(c["tau_ge_2sum"]) and bool(c["tau_le_2sum"])  # equality case
    c = B.cone_inequalities(0, 5)
    assert bool(c["omega3"]) and bool(c["tau_le_2sum"])


def test_cone_fuzz():
    rng = np.random.default_rng(7)
    e = rng.uniform(-100, 100, 10 ** 5)
    t = rng.uniform(-100, 100, 10 ** 5)
    assert np.all(B.cone_inequalities(e, t)["holds"])


# ---------------------------------------------------------------- bounds

@pytest.fixture(scope="module")
def master():
    return B.check_phi_master_bound(0.25, 0.4, 5)


def test_master_bound(master):
    assert master.passed and master.violations == 0 and math.isfinite(master.C)


def test_master_bound_rates(master):
    r = master.rates
    assert r["eta_decay"]["measured"] >= 0.9 * math.pi / 4
    assert abs(r["tau_algebraic"]["measured"] - 1.4) <= 0.14


def test_lemma_bounds():
    checks = B.check_lemma_bounds(0.25, 0.4, 5)
    assert [c.name for c in checks] == ["lemma_strip_decay", "lemma_tau_algebraic",
                                        "lemma_double_exponential", "lemma_exchange_decay"]
    for c in checks:
        assert c.passed, c.line()
    covered = set().union(*(set(c.regions) for c in checks))
    assert covered == set(B.LABELS) - {"S0"}


def test_bound_sigma_window():
    with pytest.raises(DegenerateError):
        B.check_phi_master_bound(1.3, 0.4, 5)


# ---------------------------------------------------------------- Psi

def test_psi_identity():
    d = B.psi_diagnostics(0.25 + 12j, 0.4 + 3j)
    assert d["identity_gap"] < 1e-10
    assert d["psi0"] == pytest.approx(-0.0224797, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.45), st.floats(2, 40), st.floats(0.1, 0.9), st.floats(1, 20))
def test_psi_identity_property(s1, s2, z1, z2):
    d = B.psi_diagnostics(complex(s1, s2), complex(z1, z2))
    assert d["identity_gap"] < 1e-8


def test_psi_printed_form_differs():
    d = B.psi_diagnostics(0.25 + 12j, 0.4 + 3j)
    # the printed variant misses the arg difference by an order of magnitude
    assert abs(d["psi0_as_printed"] - d["arg_difference"]) > 0.1
    assert abs(d["psi0"] - d["arg_difference"]) < 1e-4


def test_tau_arg_difference_bounded():
    sup = B.tau_arg_difference_sup(0.25, 0.4, 5)
    assert math.isfinite(sup) and sup < 10


# ---------------------------------------------------------------- kernels

def test_g2_bound(g2_check):
    assert g2_check.passed
    assert g2_check.violations == 0 and math.isfinite(g2_check.C)
    assert g2_check.slope_small >= 0.9 * 0.3
    assert g2_check.slope_large <= -0.9 * 0.3


def test_g2_is_imaginary(g2_check):
    # i G2 is real for real data
    assert g2_check.real_part_max < 1e-8


def test_g2_finite_at_unit_ratio():
    g = B.kernel_G2(np.array([1.0]), 0.4, 1.0, 2.0)
    assert np.isfinite(g[0])


def test_q2_prime_via_g2():
    r = 1.0
    q2 = q_tilde_line(F, P, part="q2")
    ref = float(np.real(_inverse_rows(q2.line, -q2.points * q2.values, np.array([r])))[0] / r)
    got = B.q2_prime_via_g2(F, P, r, h_eta=0.1)
    assert abs(got - ref) <= 5e-3 * abs(ref)


# ---------------------------------------------------------------- tip bound

def test_sigma_window_tip():
    lo, hi = B.sigma_window_tip(P)
    assert lo == pytest.approx((P.alpha - 1) / 2)
    assert hi == pytest.approx(0.4)


def test_q2_tip_bound():
    chk = B.check_q2_tip_bound(F, P)
    assert chk.passed and math.isfinite(chk.C)
    assert chk.slope >= P.alpha - 1 - 0.1


def test_q2_tip_bound_zero_source():
    chk = B.check_q2_tip_bound(zero_source(), P)
    assert chk.passed and chk.C == 0


def test_q2_tip_bound_linear_in_f():
    a = B.check_q2_tip_bound(F, P)
    b = B.check_q2_tip_bound(F.scaled(2.0), P)
    # sup |q2'| / r^(alpha-1) doubles; the constant per unit ||f|| does not move
    assert max(np.abs(b.q2_prime)) == pytest.approx(2 * max(np.abs(a.q2_prime)), rel=1e-12)
    assert b.C == pytest.approx(a.C, rel=1e-12)

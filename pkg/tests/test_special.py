import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crackmellin import special as sp
from crackmellin.errors import DegenerateError, DomainError, PoleError


def k_oracle(lam, dps=30):
    """K through Barnes G, independent of the product code."""
    with mp.workdps(dps):
        l = mp.mpc(lam)
        v = (mp.pi ** (l - 0.5) * mp.barnesg(1 + l) * mp.barnesg(1.5 - l)
             / (mp.barnesg(0.5 + l) * mp.barnesg(2 - l)))
        return complex(v)


# ---------------------------------------------------------------- gamma

@pytest.mark.parametrize("z, expected", [
    (0.5, math.sqrt(math.pi)),
    (5.0, 24.0),
    (1 + 1j, 0.49801566811836 - 0.15494982830181j),
])
def test_gamma_reference_values(z, expected):
    assert abs(sp.gamma(z).value - expected) <= 1e-12 * abs(expected)


@pytest.mark.parametrize("z", [0.1 + 0.01j, -3.3 + 2j, 20 - 100j, -49.5 + 99j, 50 + 100j])
def test_gamma_against_mpmath(z):
    ref = complex(mp.gamma(z))
    g = sp.gamma(z)
    rel = abs(g.value - ref) / abs(ref)
    assert rel <= max(1e-12, g.est_rel_err)


@pytest.mark.parametrize("z", [0, -1, -7])
def test_gamma_poles(z):
    with pytest.raises(PoleError):
        sp.gamma(z)


@settings(max_examples=60, deadline=None)
@given(st.floats(-20, 20), st.floats(-30, 30))
def test_gamma_recurrence(x, y):
    z = complex(x, y)
    if abs(y) < 1e-3 and abs(x - round(x)) < 1e-3 and x < 1.5:
        return
    lhs = sp.gamma_array(np.array([z + 1]))[0]
    rhs = z * sp.gamma_array(np.array([z]))[0]
    assert abs(lhs - rhs) <= 1e-11 * max(abs(lhs), 1e-300)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 10), st.floats(-20, 20))
def test_gamma_conjugate_symmetry(x, y):
    z = complex(x, y)
    a = sp.gamma_array(np.array([z.conjugate()]))[0]
    b = sp.gamma_array(np.array([z]))[0].conjugate()
    assert abs(a - b) <= 1e-13 * abs(b)


# ---------------------------------------------------------------- omega

def test_omega_values():
    assert sp.omega(0).value == pytest.approx(1 / math.pi, abs=1e-15)
    assert abs(sp.omega(0.5).value) < 1e-15
    assert sp.omega(1j).value == pytest.approx(1.00374187319732, rel=1e-12)


def test_omega_pole():
    with pytest.raises(PoleError):
        sp.omega(2)


def test_arg_omega_matches_complex_arg():
    lam = 0.25 + 10j
    diff = sp.arg_omega(lam) - float(np.angle(sp.omega(lam).value))
    assert abs(math.remainder(diff, 2 * math.pi)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.9, 1.9), st.floats(-40, 40).filter(lambda v: abs(v) > 0.05))
def test_arg_omega_modulo_pi(l1, l2):
    lam = complex(l1, l2)
    diff = sp.arg_omega(lam) - float(np.angle(sp.omega(lam).value))
    assert abs(math.remainder(diff, math.pi)) < 1e-9


def test_arg_omega_degenerate_real_axis():
    with pytest.raises(DegenerateError):
        sp.arg_omega(0.5)


def test_arg_omega_decay_with_height():
    # |arg omega| <= C/|lam2|: fit C at one height, check it at larger ones
    c = abs(sp.arg_omega(0.25 + 10j)) * 10
    for h in (20, 40, 80):
        assert abs(sp.arg_omega(0.25 + 1j * h)) * h <= 1.01 * c + 1e-12


# ---------------------------------------------------------------- K

@pytest.mark.parametrize("lam", [0.5, 0.0])
def test_k_unit_points(lam):
    assert abs(sp.k_product(lam).value - 1) < 1e-10


@pytest.mark.parametrize("lam", [0.25 + 2j, 0.3 - 5j, 1.2 + 40j, -0.3 + 100j, 1.9 + 0.1j, -0.45 - 3j])
def test_k_against_barnes_g(lam):
    ref = k_oracle(lam)
    assert abs(sp.k_product(lam).value - ref) <= 1e-9 * abs(ref)


def test_k_functional_relation_example():
    lam = np.array([0.25 + 2j])
    ratio = sp.k_array(lam + 1) / sp.k_array(lam)
    assert abs(ratio[0] / (math.pi * sp.omega_array(lam)[0]) - 1) < 1e-8


def test_k_outside_strip():
    with pytest.raises(DomainError):
        sp.k_product(2.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(-0.45, 0.95), st.floats(-50, 50))
def test_k_functional_relation_property(l1, l2):
    lam = np.array([complex(l1, l2)])
    if abs(lam[0]) < 1e-3:
        return
    lhs = sp.k_array(lam + 1)[0]
    rhs = math.pi * sp.omega_array(lam)[0] * sp.k_array(lam)[0]
    assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.45, 1.95), st.floats(0.01, 60))
def test_k_conjugate_symmetry(l1, l2):
    a = sp.k_array(np.array([complex(l1, -l2)]))[0]
    b = sp.k_array(np.array([complex(l1, l2)]))[0].conjugate()
    assert abs(a - b) <= 1e-12 * abs(b)


def test_k0_k1_values():
    assert sp.k0(-0.5).value == pytest.approx(2.0, abs=1e-10)
    # K1(-1/2) = K(1/2) / (pi * (-1/2))
    assert sp.k1(-0.5).value == pytest.approx(-2 / math.pi, abs=1e-10)
    v = sp.k0(0.25 + 1j)
    assert np.isfinite(v.value) and v.est_rel_err <= 1e-8


# ---------------------------------------------------------------- d0

def test_d0_examples():
    lam = 0.25
    ratio = sp.d0(lam + 1, 2.0).value / sp.d0(lam, 2.0).value
    assert ratio == pytest.approx(-0.125, abs=1e-10)
    v = sp.d0(0.5, 2.0).value
    assert abs(v - 1j) < 1e-10


@pytest.mark.parametrize("kappa0", [0.5, 1.0, 2.0, 10.0])
@pytest.mark.parametrize("lam", [0.25 + 3j, -0.3 + 0.7j, 0.9 - 12j])
def test_d0_homogeneous_equation(kappa0, lam):
    a = sp.d0(lam + 1, kappa0).value
    b = sp.d0(lam, kappa0).value
    res = abs(kappa0 * a + sp.omega(lam).value * b) / abs(b)
    assert res <= 1e-8


# ---------------------------------------------------------------- asymptotics

@pytest.mark.parametrize("l1", [0.25, 0.5, 1.2])
def test_k_asymptotic_remainder_converges(l1):
    # log|K / K_asym| stays bounded and settles as the height grows
    rem = []
    for h in (15, 25, 40, 80):
        lam = l1 + 1j * h
        rem.append(math.log(abs(sp.k_product(lam).value) / abs(sp.k_asymptotic(lam).value)))
    assert max(abs(v) for v in rem) < 1.0
    steps = np.abs(np.diff(rem))
    assert np.all(steps[1:] < steps[:-1])


def test_k_asymptotic_threshold():
    with pytest.raises(DomainError):
        sp.k_asymptotic(0.5 + 2j)


# ---------------------------------------------------------------- helpers

@pytest.mark.parametrize("z", [0.25, 0.25 + 30j, 0.3 - 2j, 1.1 + 0.001j])
def test_cot_pi(z):
    ref = complex(mp.cot(mp.pi * mp.mpc(z)))
    assert abs(sp.cot_pi(np.array([z]))[0] - ref) <= 1e-13 * max(1, abs(ref))


def test_log_sin_pi_large_height():
    z = np.array([0.3 + 200j])
    ref = complex(mp.log(mp.sin(mp.pi * mp.mpc(z[0]))))
    got = sp.log_sin_pi(z)[0]
    assert abs(got.real - ref.real) < 1e-10
    assert abs(math.remainder(got.imag - ref.imag, 2 * math.pi)) < 1e-8

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from econosim.criticality import (
    DomainError,
    bounds_check,
    critical_omega,
    critical_point,
    expected_branching,
    exponent_map,
    ideal_degree_weights,
    inverse_exponent_map,
    omega_to_threshold,
    riemann_zeta,
    threshold_to_omega,
)


def test_zeta_two():
    assert riemann_zeta(2.0) == pytest.approx(math.pi**2 / 6, abs=1e-12)


def test_zeta_five_against_partial_sum_with_tail_bound():
    n = 200_000
    head = math.fsum(k**-5.0 for k in range(1, n))
    # integral bounds on the remainder sum_{k>=n} k^-5
    lo, hi = n**-4 / 4, (n - 1) ** -4 / 4
    z = riemann_zeta(5.0)
    assert head + lo - 1e-15 <= z <= head + hi + 1e-15
    assert z == pytest.approx(1.0369277551, abs=1e-10)


def test_zeta_near_pole_is_finite_and_large():
    z = riemann_zeta(1.000001)
    assert math.isfinite(z) and z > 1e5


@pytest.mark.parametrize("s", [1.5, 2.0, 2.5, 3.3, 4.0, 5.0, 7.5, 12.0])
def test_zeta_against_mpmath(s):
    assert riemann_zeta(s) == pytest.approx(float(mpmath.zeta(s)), abs=1e-10)


@pytest.mark.parametrize("s", [1.5, 2.0, 3.0, 6.0])
def test_zeta_self_consistency_of_truncation(s):
    """Short direct sum plus the same tail correction agrees with a long sum."""
    def em(n):
        head = math.fsum(k**-s for k in range(1, n))
        tail = n ** (1 - s) / (s - 1) + 0.5 * n**-s + s * n ** (-s - 1) / 12
        tail -= s * (s + 1) * (s + 2) * n ** (-s - 3) / 720
        return head + tail
    assert abs(em(20) - em(2000)) <= 1e-10
    assert abs(riemann_zeta(s) - em(2000)) <= 1e-10


@pytest.mark.parametrize("s", [1.0, 0.5, -2.0])
def test_zeta_domain(s):
    with pytest.raises(DomainError):
        riemann_zeta(s)


def test_critical_omega_gamma_three():
    assert critical_omega(3.0, 1.0) == pytest.approx(1.0369277551 ** (1 / 3), abs=1e-9)
    assert critical_omega(3.0, 1.0) == pytest.approx(1.012161, abs=1e-6)


def test_critical_omega_needs_positive_q():
    with pytest.raises(DomainError):
        critical_omega(2.5, 0.0)


def test_critical_omega_decreasing_in_gamma():
    g = np.linspace(2.01, 2.99, 50)
    w = [critical_omega(x, 1.0) for x in g]
    assert all(a > b for a, b in zip(w, w[1:]))


@given(st.floats(1.2, 4.0), st.floats(0.01, 50.0))
def test_critical_omega_homogeneous_in_q(gamma, q):
    assert critical_omega(gamma, q) == q * critical_omega(gamma, 1.0)


def test_threshold_examples():
    assert omega_to_threshold(1.0) == 0.0
    assert omega_to_threshold(1.012161) == pytest.approx(0.006044, abs=1e-6)


def test_threshold_round_trip():
    rng = np.random.default_rng(0)
    for w in rng.uniform(0.1, 10.0, 10_000):
        assert threshold_to_omega(omega_to_threshold(w)) == pytest.approx(w, rel=1e-14)


@pytest.mark.parametrize("gamma", [2.2, 2.5, 3.0])
def test_branching_is_one_at_critical_omega(gamma):
    w = critical_omega(gamma, 1.0)
    b = expected_branching(ideal_degree_weights(gamma, 1.0, kmax=2_000_000), w, 1.0, gamma)
    assert b == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("gamma", [2.2, 2.7])
def test_branching_scales_with_omega(gamma):
    hist = {1: 50, 2: 20, 3: 9, 7: 2, 40: 1}
    b1 = expected_branching(hist, 1.3, 1.0, gamma, normalize=True)
    b2 = expected_branching(hist, 2.6, 1.0, gamma, normalize=True)
    assert b2 == pytest.approx(b1 * 2.0**-gamma, rel=1e-14)


def test_exponent_map_bounds():
    assert exponent_map(2.0) == 2.0
    assert exponent_map(3.0) == 3.5
    assert inverse_exponent_map(2.51) == pytest.approx(2.34, abs=0.005)


@given(st.floats(2.0, 3.5))
def test_exponent_round_trip(m):
    assert exponent_map(inverse_exponent_map(m)) == pytest.approx(m, abs=1e-12)


def test_bounds_flags():
    assert bounds_check(gamma=2.5, m=2.75) == {"gamma_in_bounds": True, "m_in_bounds": True}
    assert bounds_check(m=3.6) == {"m_in_bounds": False}
    assert not bounds_check(gamma=3.0)["gamma_in_bounds"]


def test_critical_point_fields():
    cp = critical_point(2.5, 1.0)
    assert cp.omega == pytest.approx(threshold_to_omega(cp.u_th), rel=1e-14)
    assert cp.m == exponent_map(2.5)
    assert cp.gamma_in_bounds and cp.m_in_bounds

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from sta_crane.adiabatic_oracle import (
    adiabatic_energy_exact,
    adiabatic_energy_small_osc,
    adiabatic_final_angle,
    elliptic_E_incomplete,
    energy_from_angle,
    invariant_area,
    max_librating_area,
)
from sta_crane.dynamics import simulate_exact
from sta_crane.errors import DomainError, OverTheTopError
from sta_crane.inverse_design import ControlTrajectory, DirectSegment


@settings(max_examples=60, deadline=None)
@given(v=st.floats(1.0001, 500.0), frac=st.floats(0.0, 1.0))
def test_second_kind_above_unit_parameter_against_quadrature(v, frac):
    phi = frac * math.asin(1 / math.sqrt(v))
    ref, _ = quad(lambda t: math.sqrt(max(0.0, 1 - v * math.sin(t) ** 2)), 0, phi,
                  epsabs=1e-15, epsrel=1e-13)
    assert elliptic_E_incomplete(phi, v) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_second_kind_complex_region_is_rejected():
    with pytest.raises(DomainError):
        elliptic_E_incomplete(1.0, 4.0)


def test_area_paths_agree_over_full_range():
    worst = 0.0
    for th in np.linspace(0.01, 3.0, 300):
        a = invariant_area(5.0, th, method="quadrature")
        b = invariant_area(5.0, th, method="elliptic")
        worst = max(worst, abs(a - b) / a)
    assert worst < 1e-8


def test_area_small_angle_limit():
    th, l, m, g = 1e-3, 4.0, 2.0, 9.81
    expected = math.pi * m * th * th * l**1.5 * math.sqrt(g)
    assert invariant_area(l, th, m, g) == pytest.approx(expected, rel=1e-6)


def test_area_tends_to_separatrix():
    assert invariant_area(3.0, math.pi - 1e-9) == pytest.approx(max_librating_area(3.0),
                                                                rel=1e-6)


def test_area_domain():
    for bad in (0.0, -0.1, math.pi, 4.0):
        with pytest.raises(DomainError):
            invariant_area(1.0, bad)
    with pytest.raises(ValueError):
        invariant_area(1.0, 0.5, method="series")


def test_final_angle_small_oscillation_limit():
    th0 = math.radians(1)
    hoist = adiabatic_final_angle(10, 5, th0)
    lower = adiabatic_final_angle(5, 10, th0)
    assert hoist / th0 == pytest.approx(2**0.75, rel=2e-4)
    assert lower / th0 == pytest.approx(2**-0.75, rel=2e-4)
    assert adiabatic_final_angle(7, 7, 0.3) == 0.3


@settings(max_examples=40, deadline=None)
@given(th=st.floats(0.01, 2.0), l0=st.floats(1, 60), lf=st.floats(1, 60))
def test_final_angle_round_trip(th, l0, lf):
    try:
        th_f = adiabatic_final_angle(l0, lf, th)
    except OverTheTopError:
        return
    assert adiabatic_final_angle(lf, l0, th_f) == pytest.approx(th, abs=1e-9)


def test_methods_give_same_final_angle():
    a = adiabatic_final_angle(10, 5, 0.8, method="quadrature")
    b = adiabatic_final_angle(10, 5, 0.8, method="elliptic")
    assert a == pytest.approx(b, abs=1e-10)


def test_over_the_top():
    with pytest.raises(OverTheTopError):
        adiabatic_final_angle(50, 1, 2.5)


def test_adiabatic_energies():
    assert adiabatic_energy_small_osc(1.0, 2.0, 2.0) == 1.0
    assert adiabatic_energy_small_osc(1.0, math.sqrt(9.81 / 10), math.sqrt(9.81 / 5)) == \
        pytest.approx(math.sqrt(2), rel=1e-15)
    with pytest.raises(DomainError):
        adiabatic_energy_small_osc(1.0, 0.0, 1.0)
    # finite-angle energy converges to the small-oscillation value
    e0 = energy_from_angle(10, 1e-3)
    assert adiabatic_energy_exact(10, 5, e0) / e0 == pytest.approx(math.sqrt(2), rel=1e-6)
    assert adiabatic_energy_exact(10, 5, 0.0) == 0.0


def test_finite_angle_energy_matches_slow_exact_hoist():
    # quintic rope ramp 10 m -> 5 m over 200 s, far slower than the swing
    tf = 200.0
    c = np.zeros(6)
    c[0] = 10.0
    c[3:] = -5.0 * np.array([10.0, -15.0, 6.0])
    traj = ControlTrajectory([DirectSegment(c, [0.0], tf, 9.81)], n_grid=3)
    res = simulate_exact(traj, 0.5, grid=np.array([0.0, tf]))
    assert res.Ef == pytest.approx(adiabatic_energy_exact(10, 5, res.E0), rel=1e-6)

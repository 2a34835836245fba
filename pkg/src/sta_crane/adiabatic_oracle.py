"""Exact adiabatic final angle of a pendulum whose length changes slowly.

The action (phase-space area of one libration) is conserved in the adiabatic
limit, so matching areas at the initial and final rope lengths fixes the
final turning angle without any small-angle approximation.

Two independent evaluations of the area are provided: direct quadrature of
the action integral and a closed form through the incomplete elliptic
integral of the second kind with parameter 2/(1 - cos th_max) > 1.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ellipeinc, ellipkinc

from .errors import DomainError, OverTheTopError


def elliptic_E_incomplete(phi: float, v: float) -> float:
    """Incomplete elliptic integral of the second kind E(phi|v).

    E(phi|v) = int_0^phi sqrt(1 - v sin^2 t) dt. For v > 1 the integral is
    real only while v sin^2 phi <= 1; it is reduced to parameter 1/v by the
    reciprocal-parameter transformation with sin(beta) = sqrt(v) sin(phi):

        E(phi|v) = sqrt(v) E(beta|1/v) - (v - 1)/sqrt(v) F(beta|1/v)
    """
    if v <= 1.0:
        return float(ellipeinc(phi, v))
    sv = math.sqrt(v)
    sb = sv * math.sin(phi)
    if abs(sb) > 1.0:
        if abs(sb) > 1.0 + 1e-12:
            raise DomainError(f"E(phi|v) is complex for phi={phi}, v={v}")
        sb = math.copysign(1.0, sb)
    beta = math.asin(sb)
    m = 1.0 / v
    return float(sv * ellipeinc(beta, m) - (v - 1.0) / sv * ellipkinc(beta, m))


# ---------------------------------------------------------------------------
# action of a librating pendulum


def _check_angle(theta_max):
    if not (0.0 < theta_max < math.pi):
        raise DomainError(f"turning angle must lie in (0, pi), got {theta_max}")


def _area_quadrature(theta_max: float) -> float:
    """int_0^th_max sqrt(cos th - cos th_max) d th.

    With cos th = cos th_max + (1 - cos th_max) u^2 the integrand becomes a
    smooth function times (1 - u)^(-1/2), integrated with an algebraic weight.
    """
    k2 = math.sin(theta_max / 2.0) ** 2

    def smooth(u):
        return 4.0 * k2 * u * u / math.sqrt(2.0 * (1.0 + u) * (1.0 - k2 * (1.0 - u * u)))

    val, _ = quad(smooth, 0.0, 1.0, weight="alg", wvar=(0.0, -0.5),
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _area_elliptic(theta_max: float) -> float:
    one_minus_cos = 2.0 * math.sin(theta_max / 2.0) ** 2
    v = 2.0 / one_minus_cos
    # same integral as _area_quadrature, written through E(th_max/2 | v)
    return 2.0 * math.sqrt(one_minus_cos) * elliptic_E_incomplete(theta_max / 2.0, v)


def invariant_area(l: float, theta_max: float, m_load: float = 1.0, g: float = 9.81,
                   method: str = "quadrature") -> float:
    """Phase-space area 4 int_0^th_max p_theta d theta of one libration (J s)."""
    _check_angle(theta_max)
    if method == "quadrature":
        core = _area_quadrature(theta_max)
    elif method == "elliptic":
        core = _area_elliptic(theta_max)
    else:
        raise ValueError(f"unknown method {method!r}")
    return 4.0 * math.sqrt(2.0) * m_load * l**1.5 * math.sqrt(g) * core


def max_librating_area(l: float, m_load: float = 1.0, g: float = 9.81) -> float:
    """Area of the separatrix (turning angle pi)."""
    return 16.0 * m_load * l**1.5 * math.sqrt(g)


def adiabatic_final_angle(l0: float, lf: float, theta_max0: float, m_load: float = 1.0,
                          g: float = 9.81, method: str = "quadrature") -> float:
    """Turning angle at length lf with the same action as (l0, theta_max0)."""
    _check_angle(theta_max0)
    if l0 == lf:
        return float(theta_max0)
    target = invariant_area(l0, theta_max0, m_load, g, method)
    if target >= max_librating_area(lf, m_load, g):
        raise OverTheTopError("adiabatic action exceeds the separatrix at lf")
    # area scales as l^1.5 th^2 for small angles: seed the bracket from that
    guess = theta_max0 * (l0 / lf) ** 0.75

    def f(th):
        return invariant_area(lf, th, m_load, g, method) - target

    lo, hi = min(guess, math.pi) * 0.5, min(guess * 2.0, math.pi * (1 - 1e-15))
    while f(lo) > 0:
        lo *= 0.5
    if f(hi) < 0:
        hi = math.pi * (1 - 1e-15)
    return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def energy_from_angle(l: float, theta_max: float, m_load: float = 1.0,
                      g: float = 9.81) -> float:
    """Oscillation energy with zero at the hanging position."""
    return m_load * g * l * (1.0 - math.cos(theta_max))


def adiabatic_energy_exact(l0: float, lf: float, E0: float, m_load: float = 1.0,
                           g: float = 9.81) -> float:
    """Final energy after an infinitely slow change l0 -> lf, no small-angle limit."""
    cos0 = 1.0 - E0 / (m_load * g * l0)
    if cos0 <= -1.0:
        raise OverTheTopError("initial energy is above the separatrix")
    if E0 == 0.0:
        return 0.0
    th_f = adiabatic_final_angle(l0, lf, math.acos(cos0), m_load, g)
    return energy_from_angle(lf, th_f, m_load, g)


def adiabatic_energy_small_osc(E0: float, omega0: float, omegaf: float) -> float:
    if omega0 <= 0 or omegaf <= 0:
        raise DomainError("frequencies must be positive")
    return E0 * omegaf / omega0

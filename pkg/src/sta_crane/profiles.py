"""Polynomial auxiliary functions in normalized time ``S = t / tf``.

Both the scaling function ``b`` and the transport function ``alpha`` are
polynomials whose monomials ``S^0..S^2`` are fixed by the left boundary and
whose ``S^3..S^5`` coefficients are solved from the right boundary, so any
choice of the higher "free" coefficients keeps value, first and second
derivative pinned at ``t = 0`` and ``t = tf``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError, InvalidInputError

# Inverse of [[1, 1, 1], [3, 4, 5], [6, 12, 20]]: maps the right-boundary
# (value, slope, curvature) mismatch onto the S^3, S^4, S^5 coefficients.
_RIGHT_BOUNDARY_INV = np.array(
    [[10.0, -4.0, 0.5], [-15.0, 7.0, -1.0], [6.0, -3.0, 0.5]]
)

# evaluation slack on the time domain, relative to tf
_T_SLACK = 1e-12


@dataclass(frozen=True)
class PolynomialProfile:
    """Polynomial in ``S = t / tf`` with coefficients in ascending order.

    ``value_scale`` only records the unit of the value ("1" for b, "m" for
    alpha); derivatives of order k carry that unit per s^k.
    """

    coefficients: tuple
    tf: float
    value_scale: str = "1"
    free: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.tf > 0:
            raise InvalidInputError(f"duration must be positive, got {self.tf}")
        object.__setattr__(
            self, "coefficients", tuple(float(c) for c in self.coefficients)
        )

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def derivative_coefficients(self, order: int) -> np.ndarray:
        """Coefficients (in S) of the order-th time derivative."""
        c = np.asarray(self.coefficients)
        if order:
            c = P.polyder(c, order) / self.tf**order
        return c

    def __call__(self, t, order: int = 0):
        """Vectorized evaluation without domain checks."""
        s = np.asarray(t, dtype=float) / self.tf
        return P.polyval(s, self.derivative_coefficients(order))

    def evaluate(self, t: float, order: int = 0) -> float:
        if order not in (0, 1, 2, 3):
            raise InvalidInputError(f"derivative order must be 0..3, got {order}")
        slack = _T_SLACK * self.tf
        if not (-slack <= t <= self.tf + slack):
            raise DomainError(f"t={t} outside [0, {self.tf}]")
        return float(self(t, order))

    def to_dict(self) -> dict:
        return {
            "coefficients": list(self.coefficients),
            "tf": self.tf,
            "value_scale": self.value_scale,
        }


def evaluate(profile: PolynomialProfile, t: float, order: int = 0) -> float:
    return profile.evaluate(t, order)


def constrained_coefficients(free: dict, right_value: float,
                             left_value: float = 0.0) -> np.ndarray:
    """Ascending coefficients with pinned value/slope/curvature at both ends.

    ``free`` maps exponents >= 6 to their coefficients. The polynomial equals
    ``left_value`` at S=0 and ``right_value`` at S=1 with vanishing first and
    second derivatives at both ends.
    """
    degree = max([5, *free])
    coeffs = np.zeros(degree + 1)
    coeffs[0] = left_value
    rhs = np.array([right_value - left_value, 0.0, 0.0])
    for j, c in free.items():
        if j < 6:
            raise InvalidInputError(f"free exponents must be >= 6, got {j}")
        coeffs[j] = c
        rhs -= c * np.array([1.0, j, j * (j - 1)])
    coeffs[3:6] = _RIGHT_BOUNDARY_INV @ rhs
    return coeffs


def scaling_ratio(l0: float, lf: float) -> float:
    """gamma = (omega0/omegaf)^(1/2) = (lf/l0)^(1/4) for a pendulum at rest."""
    return (lf / l0) ** 0.25


def build_b_profile(l0: float, lf: float, a6: float, a7: float,
                    tf: float) -> PolynomialProfile:
    """Degree-7 scaling function with b(0)=1, b(tf)=gamma and flat ends."""
    if not (l0 > 0 and lf > 0):
        raise InvalidInputError(f"rope lengths must be positive: l0={l0}, lf={lf}")
    if not tf > 0:
        raise InvalidInputError(f"duration must be positive, got {tf}")
    gamma = scaling_ratio(l0, lf)
    coeffs = constrained_coefficients({6: a6, 7: a7}, gamma, left_value=1.0)
    return PolynomialProfile(tuple(coeffs), tf, "1", free=(a6, a7))


def build_alpha_profile(b6: float, b7: float, tf: float) -> PolynomialProfile:
    """Degree-7 transport function vanishing to second order at both ends."""
    return build_extended_alpha_profile((b6, b7), (), tf)


def build_extended_alpha_profile(base: Sequence[float], extra: Sequence[float],
                                 tf: float) -> PolynomialProfile:
    """Transport function with extra monomials S^8, S^9, ... appended.

    The S^3..S^5 coefficients are re-solved so the six boundary conditions
    hold for every value of ``base`` and ``extra``.
    """
    if not tf > 0:
        raise InvalidInputError(f"duration must be positive, got {tf}")
    b6, b7 = base
    free = {6: b6, 7: b7}
    free.update({8 + k: e for k, e in enumerate(extra)})
    coeffs = constrained_coefficients(free, 0.0)
    return PolynomialProfile(tuple(coeffs), tf, "m", free=(b6, b7, *extra))


def alpha_basis(n_extra: int, tf: float) -> list:
    """Unit-coefficient transport profiles, one per free parameter.

    Order: b6, b7, then the extra monomials. Any transport profile is the
    linear combination of these with its free parameters as weights.
    """
    n = 2 + n_extra
    basis = []
    for k in range(n):
        unit = [0.0] * n
        unit[k] = 1.0
        basis.append(build_extended_alpha_profile(unit[:2], unit[2:], tf))
    return basis

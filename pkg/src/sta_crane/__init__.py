"""Invariant-based inverse engineering of overhead-crane controls."""

__version__ = "0.1.0"

from .profiles import (
    PolynomialProfile,
    build_alpha_profile,
    build_b_profile,
    build_extended_alpha_profile,
)
from .inverse_design import (
    ControlTrajectory,
    ScenarioSpec,
    design_dual_protocol,
    design_sequential_protocol,
    design_transport,
)

__all__ = [
    "PolynomialProfile",
    "build_alpha_profile",
    "build_b_profile",
    "build_extended_alpha_profile",
    "ControlTrajectory",
    "ScenarioSpec",
    "design_dual_protocol",
    "design_sequential_protocol",
    "design_transport",
]

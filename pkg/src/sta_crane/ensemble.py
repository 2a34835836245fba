"""Microcanonical ensembles of initial payload states in the harmonic model.

The homogeneous harmonic flow over the protocol is a unit-determinant 2x2
map. Averaging the final energy over a uniform initial phase gives a closed
form that is never below the adiabatic energy, with equality (and zero
variance) for shortcut protocols.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.integrate import solve_ivp

from .inverse_design import ControlTrajectory, DirectSegment


@dataclass(frozen=True)
class MonodromyMatrix:
    a: float
    b: float
    c: float
    d: float
    # final state reached from (q, p) = (0, 0): the forced, affine part
    offset_q: float = 0.0
    offset_p: float = 0.0

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    def apply(self, q0, p0):
        return (self.a * q0 + self.b * p0 + self.offset_q,
                self.c * q0 + self.d * p0 + self.offset_p)


@dataclass(frozen=True)
class EnsembleSummary:
    E0: float
    Ef_mean: float
    variance: float
    E_ad: float
    alpha_bar: float
    beta_bar: float
    eta_bar: float
    offset_energy: float
    closed_form_valid: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def final_energy(self, phi):
        """Final energy of the homogeneous flow for initial phase ``phi``."""
        phi = np.asarray(phi, dtype=float)
        return self.E0 * (self.alpha_bar * np.cos(phi) ** 2
                          + self.beta_bar * np.sin(phi) ** 2
                          + self.eta_bar * np.sin(2 * phi))


def _harmonic_flow(traj: ControlTrajectory, y0: np.ndarray, m: float, forced: np.ndarray,
                   rtol: float, atol: float) -> np.ndarray:
    """Propagate many (q, p) pairs at once; ``forced`` masks which pairs feel x''."""
    from .dynamics import _pieces

    n = y0.size // 2
    y = y0.astype(float).copy()
    f = forced.astype(float)
    for seg, start, a, b in _pieces(traj):
        def rhs(t, y, seg=seg, start=start):
            tau = t - start
            q, p = y[:n], y[n:]
            return np.concatenate([p / m, -m * seg.omega2_at(tau) * q
                                   - m * seg.xddot_at(tau) * f])
        sol = solve_ivp(rhs, (start + a, start + b), y, method="DOP853",
                        rtol=rtol, atol=atol)
        if sol.status != 0:
            raise RuntimeError(f"harmonic flow failed: {sol.message}")
        y = sol.y[:, -1]
    return y


def compute_monodromy(traj, tf: float | None = None, m_load: float = 1.0, *,
                      rtol: float = 1e-11, atol: float = 1e-13) -> MonodromyMatrix:
    """Phase-flow matrix of q' = p/m, p' = -m omega^2 q over the protocol.

    ``traj`` is a ControlTrajectory or a callable omega^2(t) (then ``tf`` is
    required and there is no forcing). The zero-state response to the trolley
    forcing is returned as the offset.
    """
    if not isinstance(traj, ControlTrajectory):
        if tf is None:
            raise ValueError("tf is required when omega^2 is given as a function")
        traj = _frequency_only(traj, tf)
    # columns: (1, 0), (0, 1), forced from rest
    y0 = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    y = _harmonic_flow(traj, y0, m_load, np.array([False, False, True]), rtol, atol)
    q, p = y[:3], y[3:]
    return MonodromyMatrix(q[0], q[1], p[0], p[1], q[2], p[2])


class _FrequencyOnly:
    kind = "frequency"

    def __init__(self, omega2, tf):
        self._w2 = omega2
        self.duration = float(tf)
        self.breakpoints = ()
        self.g = float("nan")

    def omega2_at(self, tau):
        return float(self._w2(tau))

    def xddot_at(self, tau):
        return 0.0


def _frequency_only(omega2, tf):
    traj = ControlTrajectory.__new__(ControlTrajectory)
    traj.segments = [_FrequencyOnly(omega2, tf)]
    traj.starts = np.array([0.0, float(tf)])
    traj.tf = float(tf)
    return traj


def microcanonical_average(phi_map: MonodromyMatrix, E0: float, omega0: float,
                           omegaf: float, m_load: float = 1.0) -> EnsembleSummary:
    """Mean and variance of the final energy over a uniform initial phase.

    Only the homogeneous part of the flow enters the closed form; a non-zero
    forced offset clears ``closed_form_valid``.
    """
    a, b, c, d = phi_map.a, phi_map.b, phi_map.c, phi_map.d
    m = m_load
    ratio = omegaf / omega0
    alpha_bar = c * c / (m * m * omega0**2) + a * a * ratio**2
    beta_bar = d * d + omegaf**2 * m * m * b * b
    eta_bar = c * d / (m * omega0) + a * b * m * omegaf**2 / omega0
    mean = 0.5 * E0 * (alpha_bar + beta_bar)
    # equals (E0^2/2)[(mean/E0)^2 - ratio^2] when det = 1, but cannot round
    # below zero
    variance = 0.5 * E0**2 * (0.25 * (alpha_bar - beta_bar) ** 2 + eta_bar**2)
    offset_energy = (phi_map.offset_p**2 / (2 * m)
                     + 0.5 * m * omegaf**2 * phi_map.offset_q**2)
    valid = offset_energy <= 1e-12 * max(E0, 1e-300)
    return EnsembleSummary(E0, mean, variance, E0 * ratio, alpha_bar, beta_bar,
                           eta_bar, offset_energy, bool(valid))


def sample_phases(seed: int, n: int, start: int = 0) -> np.ndarray:
    """Uniform phases in [0, 2 pi), sample i drawn from its own Philox counter.

    Sample i depends only on (seed, i), never on how many others are drawn
    or in which order.
    """
    out = np.empty(n)
    for k in range(n):
        bitgen = np.random.Philox(key=seed & (2**64 - 1), counter=start + k)
        out[k] = np.random.Generator(bitgen).random()
    return 2.0 * np.pi * out


def monte_carlo_average(traj: ControlTrajectory, E0: float, n_samples: int,
                        seed: int = 0, m_load: float = 1.0, *, rtol: float = 1e-11,
                        atol: float = 1e-13, return_samples: bool = False):
    """Brute-force microcanonical average: simulate every sampled phase.

    Each sample is a full forced harmonic run from
    q0 = sqrt(2 E0/(m w0^2)) cos phi, p0 = sqrt(2 m E0) sin phi.
    Returns ``(mean, variance)`` or, with ``return_samples``,
    ``(mean, variance, phi, Ef)``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    m = m_load
    w0sq = float(traj.omega2(0.0)[0])
    wfsq = float(traj.omega2(traj.tf)[0])
    phi = sample_phases(seed, n_samples)
    q0 = np.sqrt(2 * E0 / (m * w0sq)) * np.cos(phi)
    p0 = np.sqrt(2 * m * E0) * np.sin(phi)
    y = _harmonic_flow(traj, np.concatenate([q0, p0]), m,
                       np.ones(n_samples, dtype=bool), rtol, atol)
    qf, pf = y[:n_samples], y[n_samples:]
    ef = pf**2 / (2 * m) + 0.5 * m * wfsq * qf**2
    mean = float(ef.mean())
    var = float(ef.var())
    if return_samples:
        return mean, var, phi, ef
    return mean, var


def random_reference_protocol(rng: np.random.Generator, l0: float, lf: float, d: float,
                              tf: float, g: float = 9.81, n_modes: int = 3,
                              amplitude: float = 0.3, n_grid: int = 401
                              ) -> ControlTrajectory:
    """Smooth protocol with the right end states but no scaling-function design.

    Rope and trolley are quintic smooth steps plus random bumps
    S^3 (1 - S)^3 S^k, so l, x and their first two derivatives match the
    shortcut boundary conditions while omega^2 = (g - l'')/l is arbitrary.
    """
    step = np.array([0, 0, 0, 10, -15, 6], dtype=float)
    bump = np.array([0, 0, 0, 1, -3, 3, -1], dtype=float)

    def coeffs(start, delta, scale):
        c = np.zeros(7 + n_modes)
        c[0] = start
        c[:6] += delta * step
        for k in range(n_modes):
            # bump peaks at 1/64, so scale it up to O(scale)
            c[k:k + 7] += rng.uniform(-1, 1) * 64 * scale * bump
        return c

    lscale = amplitude * min(l0, lf)
    l_c = coeffs(l0, lf - l0, lscale)
    x_c = coeffs(0.0, d, amplitude * max(d, 1.0)) if d else np.zeros(1)
    return ControlTrajectory([DirectSegment(l_c, x_c, tf, g)], n_grid)

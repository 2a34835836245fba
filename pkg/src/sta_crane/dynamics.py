"""Payload simulation under prescribed rope-length and trolley controls.

Models
------
exact     l th'' + 2 l' th' + g sin th + x'' cos th = 0
harmonic  q'' + omega^2(t) q = -x''
coupled   exact swing plus the trolley force balance, yielding the
          actuating force and its power.

Every exact run integrates the rope length and trolley position alongside the
swing angle so the controls are reproduced from their accelerations, and it
carries two accumulators (payload horizontal work and int x'^2 dt) that make
the power bookkeeping exact to integrator tolerance.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import OverTheTopError
from .inverse_design import (
    ATOL,
    RTOL,
    SEGMENT_KINDS,
    ControlTrajectory,
    Segment,
)

log = logging.getLogger(__name__)


@dataclass
class SimulationResult:
    model: str
    t: np.ndarray
    theta: np.ndarray
    thetadot: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    E: np.ndarray
    E0: float
    Ef: float
    theta_max_final: float
    m_load: float
    l: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    valid: bool = True
    extras: dict = field(default_factory=dict)
    pieces: list = field(default_factory=list, repr=False)

    @property
    def energy_ratio(self) -> float:
        return self.Ef / self.E0 if self.E0 else float("nan")

    def dense(self, t):
        """Interpolated state at arbitrary times from the integrator pieces."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = None
        for ta, tb, sol in self.pieces:
            mask = (t >= ta) & (t <= tb)
            if not mask.any():
                continue
            vals = sol(t[mask])
            if out is None:
                out = np.full((vals.shape[0], t.size), np.nan)
            out[:, mask] = vals
        return out

    def summary(self) -> dict:
        out = {"model": self.model, "E0": self.E0, "Ef": self.Ef,
               "Ef_over_E0": self.energy_ratio,
               "theta_max_final": self.theta_max_final, "valid": self.valid}
        out.update({k: v for k, v in self.extras.items() if np.isscalar(v)})
        return out


@dataclass(frozen=True)
class ThreeStepParams:
    a_max: float
    T: float
    t_c: float

    @property
    def tf(self) -> float:
        return 2.0 * self.T + self.t_c

    @property
    def displacement(self) -> float:
        return self.a_max * self.T * (self.T + self.t_c)


class ThreeStepSegment(Segment):
    """Bang-coast-bang trolley acceleration at constant rope length."""

    kind = "three_step"

    def __init__(self, a_max, T, t_c, l, g):
        self.params = ThreeStepParams(float(a_max), float(T), float(t_c))
        self.l = float(l)
        self.g = float(g)
        self.duration = self.params.tf

    def omega2(self, tau):
        return np.full_like(np.asarray(tau, dtype=float), self.g / self.l)

    def rope(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.full_like(tau, self.l), np.zeros_like(tau), np.zeros_like(tau)

    def rope_acc(self, tau, l):
        return 0.0

    def trolley(self, tau):
        a, T, tc = self.params.a_max, self.params.T, self.params.t_c
        tau = np.asarray(tau, dtype=float)
        t2, t3 = T + tc, 2 * T + tc
        x1, v1 = 0.5 * a * T * T, a * T
        x2 = x1 + v1 * tc
        s = tau - t2
        x = np.where(tau < T, 0.5 * a * tau**2,
                     np.where(tau < t2, x1 + v1 * (tau - T),
                              x2 + v1 * s - 0.5 * a * s**2))
        v = np.where(tau < T, a * tau, np.where(tau < t2, v1, v1 - a * s))
        acc = np.where(tau < T, a, np.where(tau < t2, 0.0, -a))
        acc = np.where(tau >= t3, 0.0, acc)
        return x, v, acc

    def omega2_at(self, tau):
        return self.g / self.l

    def xddot_at(self, tau):
        a, T, tc = self.params.a_max, self.params.T, self.params.t_c
        if tau < T:
            return a
        if tau < T + tc:
            return 0.0
        return -a

    @property
    def breakpoints(self):
        return (self.params.T, self.params.T + self.params.t_c)

    def to_dict(self):
        p = self.params
        return {"kind": self.kind, "a_max": p.a_max, "T": p.T, "t_c": p.t_c,
                "l": self.l, "g": self.g}


SEGMENT_KINDS[ThreeStepSegment.kind] = ThreeStepSegment


def three_step_trajectory(params: ThreeStepParams, l: float, g: float = 9.80,
                          n_grid: int = 2001) -> ControlTrajectory:
    seg = ThreeStepSegment(params.a_max, params.T, params.t_c, l, g)
    return ControlTrajectory([seg], n_grid, {"a_max": params.a_max, "T": params.T,
                                             "t_c": params.t_c})


# ---------------------------------------------------------------------------
# integration driver


def _pieces(traj: ControlTrajectory):
    """Yield (segment, global start, local a, local b) between breakpoints."""
    for start, seg in zip(traj.starts, traj.segments):
        cuts = [0.0, *[b for b in seg.breakpoints if 0.0 < b < seg.duration],
                seg.duration]
        for a, b in zip(cuts[:-1], cuts[1:]):
            yield seg, start, a, b


def _run(traj, rhs_factory, y0, grid, rtol, atol):
    """Integrate piecewise; returns (t, Y, pieces) sampled on ``grid``."""
    ts, ys, pieces = [], [], []
    y = np.asarray(y0, dtype=float)
    for seg, start, a, b in _pieces(traj):
        ta, tb = start + a, start + b
        rhs = rhs_factory(seg, start)
        sel = grid[(grid >= ta) & (grid <= tb)]
        t_eval = np.unique(np.concatenate([[ta], sel, [tb]]))
        sol = solve_ivp(rhs, (ta, tb), y, method="DOP853", t_eval=t_eval,
                        rtol=rtol, atol=atol, dense_output=True)
        if sol.status != 0:
            raise RuntimeError(f"integration failed on [{ta}, {tb}]: {sol.message}")
        pieces.append((ta, tb, sol.sol))
        keep = np.isin(sol.t, grid)
        ts.append(sol.t[keep])
        ys.append(sol.y[:, keep])
        y = sol.y[:, -1]
    t = np.concatenate(ts)
    Y = np.concatenate(ys, axis=1)
    t, idx = np.unique(t, return_index=True)
    return t, Y[:, idx], pieces, y


def _payload_velocity_sq(l, ldot, th, thdot, xdot):
    return (xdot**2 + ldot**2 + (l * thdot) ** 2 + 2 * xdot * ldot * np.sin(th)
            + 2 * xdot * l * thdot * np.cos(th))


def simulate_exact(traj: ControlTrajectory, theta0: float, thetadot0: float = 0.0, *,
                   m_load: float = 1.0, rtol: float = RTOL, atol: float = ATOL,
                   grid=None) -> SimulationResult:
    """Integrate the full nonlinear swing equation under ``traj``.

    State: rope (l, l'), trolley (x, x'), swing (th, th') and accumulators
    int h'' x' dt (h = l sin th, per unit payload mass) and int x'^2 dt.
    """
    g = traj.g
    grid = traj.grid if grid is None else np.asarray(grid, dtype=float)

    def factory(seg, start):
        def rhs(t, y):
            tau = t - start
            l, ldot, x, xdot, th, thdot = y[:6]
            lddot = seg.rope_acc(tau, l)
            xddot = seg.xddot_at(tau)
            s, c = np.sin(th), np.cos(th)
            thddot = -(2 * ldot * thdot + g * s + xddot * c) / l
            hddot = lddot * s + 2 * ldot * thdot * c + l * thddot * c - l * thdot**2 * s
            return [ldot, lddot, xdot, xddot, thdot, thddot, hddot * xdot, xdot * xdot]
        return rhs

    l0, ldot0, _ = (float(v[0]) for v in traj.rope([0.0]))
    x0, xdot0, _ = (float(v[0]) for v in traj.trolley([0.0]))
    y0 = [l0, ldot0, x0, xdot0, theta0, thetadot0, 0.0, 0.0]
    t, Y, pieces, yend = _run(traj, factory, y0, grid, rtol, atol)
    l, ldot, x, xdot, th, thdot = Y[:6]
    m = m_load
    # oscillation energy with zero at the hanging equilibrium
    p_theta = m * l**2 * thdot + m * l * xdot * np.cos(th)
    E = p_theta**2 / (2 * m * l**2) + m * g * l * (1 - np.cos(th))
    valid = bool(np.all(np.abs(th) < np.pi / 2))
    if not valid:
        warnings.warn("swing angle exceeded pi/2; exact result flagged invalid")
    try:
        th_max = final_max_angle_from_state(th[-1], thdot[-1], l[-1], g)
    except OverTheTopError:
        th_max = float("nan")
        valid = False
    extras = {"payload_work_per_mass": float(yend[6]), "int_xdot_sq": float(yend[7]),
              "ldot": ldot}
    return SimulationResult("exact", t, th, thdot, l * np.sin(th),
                            l * np.cos(th) * thdot + ldot * np.sin(th), E,
                            float(E[0]), float(E[-1]), th_max, m, l, x, xdot,
                            valid, extras, pieces)


def simulate_harmonic(traj: ControlTrajectory, q0: float, qdot0: float = 0.0, *,
                      m_load: float = 1.0, rtol: float = RTOL, atol: float = ATOL,
                      grid=None) -> SimulationResult:
    """Integrate q'' + omega^2(t) q = -x'' under ``traj``."""
    grid = traj.grid if grid is None else np.asarray(grid, dtype=float)

    def factory(seg, start):
        def rhs(t, y):
            tau = t - start
            return [y[1], -seg.omega2_at(tau) * y[0] - seg.xddot_at(tau)]
        return rhs

    t, Y, pieces, _ = _run(traj, factory, [q0, qdot0], grid, rtol, atol)
    q, qdot = Y
    w2 = traj.omega2(t)
    m = m_load
    E = 0.5 * m * qdot**2 + 0.5 * m * w2 * q**2
    l = traj.rope(t)[0]
    x, xdot, _ = traj.trolley(t)
    theta = np.arcsin(np.clip(q / l, -1.0, 1.0))
    # harmonic amplitude at the final length, expressed as an angle
    amp = np.sqrt(2 * E[-1] / (m * w2[-1])) if E[-1] > 0 else 0.0
    return SimulationResult("harmonic", t, theta, np.gradient(theta, t), q, qdot, E,
                            float(E[0]), float(E[-1]), float(amp / l[-1]), m, l, x,
                            xdot, True, {}, pieces)


def final_max_angle_from_state(theta, thetadot, l, g):
    """Turning angle of the free pendulum (controls at rest) from one state."""
    # per unit mass: E~ = l^2 th'^2 / 2 - g l cos th
    e_tilde = 0.5 * l * l * thetadot**2 - g * l * np.cos(theta)
    cos_max = -e_tilde / (g * l)
    if cos_max <= -1.0:
        raise OverTheTopError(f"pendulum energy {e_tilde:.6g} J/kg is not librating")
    return float(np.arccos(min(cos_max, 1.0)))


def final_max_angle(result: SimulationResult, l_final: float | None = None,
                    g: float = 9.81) -> float:
    """Final-configuration maximal angle from the state at tf.

    Requires the controls to be at rest at tf. For harmonic results the
    stored small-oscillation amplitude is returned.
    """
    if result.model == "harmonic":
        return result.theta_max_final
    l = result.l[-1] if l_final is None else l_final
    return final_max_angle_from_state(result.theta[-1], result.thetadot[-1], l, g)


def mechanical_energy(result: SimulationResult, M: float, g: float):
    """Trolley kinetic plus payload kinetic and potential energy series."""
    m = result.m_load
    ldot = result.extras["ldot"]
    v2 = _payload_velocity_sq(result.l, ldot, result.theta, result.thetadot,
                              result.xdot)
    return 0.5 * M * result.xdot**2 + 0.5 * m * v2 - m * g * result.l * np.cos(result.theta)


def actuating_force_and_power(traj: ControlTrajectory, exact_result: SimulationResult,
                              M: float, friction: float):
    """Actuating force and power on the trolley for the exact run.

    Returns ``(F_a, P, info)`` where ``info`` holds the small-oscillation
    power, the work integral, the friction loss and the mechanical energy
    change.
    """
    if exact_result.model != "exact":
        raise ValueError("power bookkeeping needs an exact simulation")
    g = traj.g
    r = exact_result
    m = r.m_load
    t = r.t
    l, ldot, lddot = traj.rope(t)
    xddot = traj.trolley(t)[2]
    th, thdot, xdot = r.theta, r.thetadot, r.xdot
    s, c = np.sin(th), np.cos(th)
    thddot = -(2 * ldot * thdot + g * s + xddot * c) / l
    hddot = lddot * s + 2 * ldot * thdot * c + l * thddot * c - l * thdot**2 * s
    F_a = M * xddot + m * (xddot + hddot) + friction * xdot
    P = F_a * xdot
    P_small = (M * xddot - m * r.q * traj.omega2(t) + friction * xdot) * xdot
    dissipated = friction * r.extras["int_xdot_sq"]
    work = (0.5 * (M + m) * (xdot[-1] ** 2 - xdot[0] ** 2)
            + m * r.extras["payload_work_per_mass"] + dissipated)
    e_mech = mechanical_energy(r, M, g)
    info = {"P_small": P_small, "work": work, "dissipated": dissipated,
            "delta_E_mech": float(e_mech[-1] - e_mech[0]),
            "max_abs_P": float(np.abs(P).max())}
    return F_a, P, info


def simulate_coupled(traj: ControlTrajectory, theta0: float, thetadot0: float = 0.0, *,
                     m_load: float = 1.0, M: float = 0.0, friction: float = 0.0,
                     **kw) -> SimulationResult:
    res = simulate_exact(traj, theta0, thetadot0, m_load=m_load, **kw)
    F_a, P, info = actuating_force_and_power(traj, res, M, friction)
    res.model = "coupled"
    res.extras.update({"F_a": F_a, "P": P, "P_small": info.pop("P_small"), **info})
    return res

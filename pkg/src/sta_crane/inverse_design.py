"""Inverse engineering of rope length l(t) and trolley position x(t).

Pipeline for one protocol segment:

1. a scaling polynomial b(t; a6, a7) with b(0)=1, b(tf)=gamma;
2. omega^2(t) = omega0^2 / b^4 - b''/b from the Ermakov equation;
3. shoot l'' = g - omega^2 l from (l0, 0) and tune (a6, a7) so that
   l(tf) = lf and l'(tf) = 0;
4. choose (b6, b7) in alpha(t) so that x'' = -(alpha'' + omega^2 alpha)
   integrates to x(tf) = d, x'(tf) = 0. The end state is affine in
   (b6, b7), so this is a 2x2 linear solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateDesignError,
    DegenerateScalingError,
    InfeasibleHoistError,
    InvalidInputError,
    NonConvergenceError,
)
from .profiles import (
    PolynomialProfile,
    alpha_basis,
    build_b_profile,
    build_extended_alpha_profile,
)

log = logging.getLogger(__name__)

G_DEFAULT = 9.81
RTOL = 1e-10
ATOL = 1e-12
N_GRID = 2001

# Gauss-Legendre panel rule used for the trolley integrals
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_MIN_PANELS = 64


@dataclass(frozen=True)
class ScenarioSpec:
    l0: float
    lf: float
    d: float
    tf: float
    g: float = G_DEFAULT
    m_load: float = 1.0
    M_trolley: float = 0.0
    friction: float = 0.0

    def __post_init__(self):
        if not (self.l0 > 0 and self.lf > 0):
            raise InvalidInputError(
                f"rope lengths must be positive: l0={self.l0}, lf={self.lf}")
        if not self.tf > 0:
            raise InvalidInputError(f"duration must be positive, got {self.tf}")
        if not self.d >= 0:
            raise InvalidInputError(f"displacement must be >= 0, got {self.d}")
        if not self.g > 0:
            raise InvalidInputError(f"gravity must be positive, got {self.g}")
        if self.m_load < 0 or self.M_trolley < 0 or self.friction < 0:
            raise InvalidInputError("masses and friction must be non-negative")

    @property
    def omega0(self) -> float:
        return np.sqrt(self.g / self.l0)

    @property
    def omegaf(self) -> float:
        return np.sqrt(self.g / self.lf)

    def replace(self, **changes) -> "ScenarioSpec":
        return ScenarioSpec(**{**asdict(self), **changes})


@dataclass
class DesignReport:
    converged: bool
    residuals: dict
    iterations: int = 0
    seed: tuple = (0.0, 0.0)

    def to_dict(self) -> dict:
        return {"converged": self.converged, "residuals": dict(self.residuals),
                "iterations": self.iterations, "seed": list(self.seed)}


# ---------------------------------------------------------------------------
# step ii: Ermakov frequency


def omega_squared_from_b(b: PolynomialProfile, omega0: float, check_points: int = N_GRID):
    """Return omega^2(t) = omega0^2/b^4 - b''/b as a vectorized callable."""
    t = np.linspace(0.0, b.tf, check_points)
    if np.any(b(t) <= 0.0):
        raise DegenerateScalingError("scaling function b(t) is not positive on [0, tf]")
    c0 = b.derivative_coefficients(0)
    c2 = b.derivative_coefficients(2)
    w0sq = omega0 * omega0
    tf = b.tf

    def omega2(t):
        s = np.asarray(t, dtype=float) / tf
        bv = np.polynomial.polynomial.polyval(s, c0)
        return w0sq / bv**4 - np.polynomial.polynomial.polyval(s, c2) / bv

    return omega2


# ---------------------------------------------------------------------------
# step iii: rope length


def integrate_rope_length(omega2, l0: float, tf: float, g: float, *,
                          dense: bool = True, rtol: float = RTOL, atol: float = ATOL):
    """Solve l'' = g - omega^2(t) l with l(0)=l0, l'(0)=0.

    Returns the ``solve_ivp`` result (dense output when requested).
    """
    def rhs(t, y):
        return [y[1], g - omega2(t) * y[0]]

    def touches_zero(t, y):
        return y[0]
    touches_zero.terminal = True
    touches_zero.direction = -1

    sol = solve_ivp(rhs, (0.0, tf), [l0, 0.0], method="DOP853", rtol=rtol,
                    atol=atol, dense_output=dense, events=touches_zero)
    if sol.status != 0:
        raise InfeasibleHoistError(
            f"rope integration failed at t={sol.t[-1]:.6g}: {sol.message}")
    return sol


def rope_series(sol, omega2, g, t):
    l, ldot = sol.sol(t)
    return l, ldot, g - omega2(t) * l


def _shoot(a, spec: ScenarioSpec, rtol, atol):
    b = build_b_profile(spec.l0, spec.lf, a[0], a[1], spec.tf)
    w2 = omega_squared_from_b(b, spec.omega0)
    sol = integrate_rope_length(w2, spec.l0, spec.tf, spec.g, dense=False,
                                rtol=rtol, atol=atol)
    return np.array([sol.y[0, -1] - spec.lf, sol.y[1, -1]])


def solve_hoist_parameters(spec: ScenarioSpec, seed=(0.0, 0.0), *, max_iter: int = 100,
                           tol: float = 1e-9, rtol: float = RTOL, atol: float = ATOL):
    """Damped Newton on (a6, a7) so that l(tf)=lf and l'(tf)=0.

    Returns ``(a6, a7, DesignReport)``; raises NonConvergenceError if the
    iteration budget runs out.
    """
    if spec.l0 == spec.lf:
        report = DesignReport(True, {"l": 0.0, "ldot": 0.0}, 0, tuple(seed))
        if tuple(seed) == (0.0, 0.0):
            return 0.0, 0.0, report
    lscale = max(spec.l0, spec.lf)
    weights = np.array([1.0 / lscale, spec.tf / lscale])

    def converged(r):
        return abs(r[0]) < tol * lscale and abs(r[1]) < tol

    a = np.array(seed, dtype=float)
    best = None
    try:
        r = _shoot(a, spec, rtol, atol)
    except (InfeasibleHoistError, DegenerateScalingError) as exc:
        raise NonConvergenceError(f"seed {tuple(seed)} is infeasible: {exc}",
                                  iterations=0) from exc
    for it in range(1, max_iter + 1):
        best = r
        if converged(r):
            return a[0], a[1], DesignReport(
                True, {"l": float(r[0]), "ldot": float(r[1])}, it - 1, tuple(seed))
        jac = np.empty((2, 2))
        for k in range(2):
            h = 1e-6 * max(1.0, abs(a[k]))
            ah = a.copy()
            ah[k] += h
            jac[:, k] = (_shoot(ah, spec, rtol, atol) - r) / h
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError("singular shooting Jacobian",
                                      best_residual=best, iterations=it) from exc
        norm0 = np.linalg.norm(weights * r)
        lam = 1.0
        while lam > 1e-4:
            trial = a + lam * step
            try:
                rt = _shoot(trial, spec, rtol, atol)
            except (InfeasibleHoistError, DegenerateScalingError):
                lam *= 0.5
                continue
            if np.linalg.norm(weights * rt) < (1.0 - 1e-4 * lam) * norm0 or converged(rt):
                break
            lam *= 0.5
        else:
            raise NonConvergenceError("line search stalled", best_residual=best,
                                      iterations=it)
        a, r = trial, rt
        log.debug("shoot it=%d a=(%.6g, %.6g) r=(%.3e, %.3e)", it, a[0], a[1], *r)
    raise NonConvergenceError(f"no convergence within {max_iter} iterations",
                              best_residual=best, iterations=max_iter)


# ---------------------------------------------------------------------------
# step iv: trolley


def _panel_nodes(edges, tf):
    """Split consecutive edges into panels no wider than tf/_MIN_PANELS."""
    widths = np.diff(edges)
    counts = np.maximum(1, np.ceil(widths / (tf / _MIN_PANELS)).astype(int))
    owner = np.repeat(np.arange(len(widths)), counts)
    k = np.concatenate([np.arange(c) for c in counts])
    h = widths[owner] / counts[owner]
    a = edges[owner] + k * h
    nodes = a[:, None] + 0.5 * h[:, None] * (_GL_X + 1.0)
    weights = 0.5 * h[:, None] * _GL_W
    return owner, nodes, weights


def cumulative_moments(f, t, tf):
    """Cumulative integrals I(t)=int_0^t f and K(t)=int_0^t s f(s) ds.

    ``t`` must be sorted and non-negative; ``f`` is evaluated vectorized on a
    composite Gauss-Legendre rule, which is exact to rounding for the smooth
    integrands met here.
    """
    t = np.asarray(t, dtype=float)
    edges = np.concatenate([[0.0], t])
    owner, nodes, weights = _panel_nodes(edges, tf)
    fv = f(nodes)
    i_part = np.bincount(owner, (fv * weights).sum(axis=1), minlength=len(t))
    k_part = np.bincount(owner, (fv * nodes * weights).sum(axis=1), minlength=len(t))
    return np.cumsum(i_part), np.cumsum(k_part)


def trolley_from_alpha(alpha: PolynomialProfile, omega2, t, tf, x_offset=0.0):
    """x, x', x'' from the Newton equation with x(0)=x_offset, x'(0)=0."""
    t = np.asarray(t, dtype=float)
    i_cum, k_cum = cumulative_moments(lambda s: omega2(s) * alpha(s), t, tf)
    a0, a1, a2 = alpha(t), alpha(t, 1), alpha(t, 2)
    x = x_offset - a0 - (t * i_cum - k_cum)
    xdot = -a1 - i_cum
    xddot = -(a2 + omega2(t) * a0)
    return x, xdot, xddot


def solve_transport_parameters(omega2, tf: float, d: float, extra=()):
    """(b6, b7) so that x(tf)=d and x'(tf)=0 for fixed extra coefficients."""
    basis = alpha_basis(len(extra), tf)
    resp = np.empty((2, len(basis)))
    for k, phi in enumerate(basis):
        i_end, k_end = cumulative_moments(lambda s, phi=phi: omega2(s) * phi(s),
                                          [tf], tf)
        # x'(tf) = -sum c_k I_k ; x(tf) = -sum c_k (tf I_k - K_k)
        resp[0, k] = -i_end[0]
        resp[1, k] = -(tf * i_end[0] - k_end[0])
    rhs = np.array([0.0, d]) - resp[:, 2:] @ np.asarray(extra, dtype=float)
    mat = resp[:, :2]
    if abs(np.linalg.det(mat)) < 1e-14 * np.abs(mat).max() ** 2:
        raise DegenerateDesignError("transport response matrix is singular")
    b6, b7 = np.linalg.solve(mat, rhs)
    return float(b6), float(b7)


def design_trolley(omega2, spec: ScenarioSpec, extra=(), grid=None):
    """Design the trolley leg of a segment.

    Returns ``(x, xdot, xddot, b6, b7, DesignReport)``; series are sampled on
    ``grid`` (default: uniform N_GRID points).
    """
    b6, b7 = solve_transport_parameters(omega2, spec.tf, spec.d, extra)
    alpha = build_extended_alpha_profile((b6, b7), extra, spec.tf)
    if grid is None:
        grid = np.linspace(0.0, spec.tf, N_GRID)
    x, xdot, xddot = trolley_from_alpha(alpha, omega2, grid, spec.tf)
    report = DesignReport(True, {"x": float(x[-1] - spec.d), "xdot": float(xdot[-1])})
    return x, xdot, xddot, b6, b7, report


# ---------------------------------------------------------------------------
# control segments


def _horner(coeffs, s):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * s + c
    return acc


class Segment:
    """A time-local piece of a control protocol on [0, duration].

    Subclasses provide omega^2, rope acceleration and trolley kinematics as
    vectorized functions of local time.
    """

    duration: float
    g: float
    kind = "segment"

    def omega2(self, tau):
        raise NotImplementedError

    def rope(self, tau):
        """(l, l', l'') on local times."""
        raise NotImplementedError

    def rope_acc(self, tau, l):
        """l'' given the current rope length, as used inside simulations."""
        raise NotImplementedError

    def trolley(self, tau):
        """(x, x', x'') on sorted local times."""
        raise NotImplementedError

    def xddot(self, tau):
        return self.trolley(np.atleast_1d(tau))[2]

    # scalar fast paths used inside ODE right-hand sides
    def omega2_at(self, tau: float) -> float:
        return float(np.asarray(self.omega2(tau)).ravel()[0])

    def xddot_at(self, tau: float) -> float:
        return float(np.asarray(self.xddot(tau)).ravel()[0])

    @property
    def breakpoints(self):
        """Interior local times where the controls are not smooth."""
        return ()

    def to_dict(self) -> dict:
        raise NotImplementedError


class InvariantSegment(Segment):
    """Segment built from a scaling profile b and a transport profile alpha."""

    kind = "invariant"

    def __init__(self, l0, lf, d, tf, g, a6=0.0, a7=0.0, b6=0.0, b7=0.0, extra=(),
                 x_offset=0.0, *, rtol=RTOL, atol=ATOL):
        self.l0, self.lf, self.d = float(l0), float(lf), float(d)
        self.duration = self.tf = float(tf)
        self.g = float(g)
        self.a6, self.a7, self.b6, self.b7 = float(a6), float(a7), float(b6), float(b7)
        self.extra = tuple(float(e) for e in extra)
        self.x_offset = float(x_offset)
        self.b = build_b_profile(l0, lf, a6, a7, tf)
        self.alpha = build_extended_alpha_profile((b6, b7), self.extra, tf)
        self.omega0 = np.sqrt(self.g / self.l0)
        self._omega2 = omega_squared_from_b(self.b, self.omega0)
        self.static_rope = not np.any(np.asarray(self.b.coefficients[1:]))
        self._b_c = [self.b.derivative_coefficients(k).tolist() for k in (0, 2)]
        self._alpha_c = [self.alpha.derivative_coefficients(k).tolist() for k in (0, 2)]
        if self.static_rope:
            w0sq = self.omega0**2
            self._xddot_c = (-np.polynomial.polynomial.polyadd(
                self._alpha_c[1], w0sq * np.asarray(self._alpha_c[0]))).tolist()
        self._rope_sol = None
        if not self.static_rope:
            self._rope_sol = integrate_rope_length(self._omega2, self.l0, self.tf,
                                                   self.g, rtol=rtol, atol=atol)

    def omega2(self, tau):
        return self._omega2(tau)

    def rope(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.static_rope:
            return (np.full_like(tau, self.l0), np.zeros_like(tau), np.zeros_like(tau))
        return rope_series(self._rope_sol, self._omega2, self.g, tau)

    def rope_acc(self, tau, l):
        if self.static_rope:
            return 0.0
        return self.g - self.omega2_at(tau) * l

    def trolley(self, tau):
        return trolley_from_alpha(self.alpha, self._omega2, tau, self.tf, self.x_offset)

    def omega2_at(self, tau):
        if self.static_rope:
            return self.omega0 * self.omega0
        s = tau / self.tf
        b = _horner(self._b_c[0], s)
        return self.omega0**2 / b**4 - _horner(self._b_c[1], s) / b

    def xddot_at(self, tau):
        s = tau / self.tf
        if self.static_rope:
            return _horner(self._xddot_c, s)
        return -(_horner(self._alpha_c[1], s)
                 + self.omega2_at(tau) * _horner(self._alpha_c[0], s))

    def xddot(self, tau):
        return -(self.alpha(tau, 2) + self._omega2(tau) * self.alpha(tau))

    def ermakov_residual(self, tau):
        b, bdd = self.b(tau), self.b(tau, 2)
        return bdd + self._omega2(tau) * b - self.omega0**2 / b**3

    def to_dict(self):
        return {"kind": self.kind, "l0": self.l0, "lf": self.lf, "d": self.d,
                "tf": self.tf, "g": self.g, "a6": self.a6, "a7": self.a7,
                "b6": self.b6, "b7": self.b7, "extra": list(self.extra),
                "x_offset": self.x_offset}


class DirectSegment(Segment):
    """Controls given directly as polynomials in S (no scaling function).

    omega^2 = (g - l'')/l. Used for non-shortcut reference protocols.
    """

    kind = "direct"

    def __init__(self, l_coeffs, x_coeffs, tf, g):
        self.l_profile = PolynomialProfile(tuple(l_coeffs), tf, "m")
        self.x_profile = PolynomialProfile(tuple(x_coeffs), tf, "m")
        self.duration = self.tf = float(tf)
        self.g = float(g)

    def omega2(self, tau):
        return (self.g - self.l_profile(tau, 2)) / self.l_profile(tau)

    def rope(self, tau):
        p = self.l_profile
        return p(tau), p(tau, 1), p(tau, 2)

    def rope_acc(self, tau, l):
        return self.l_profile(tau, 2)

    def trolley(self, tau):
        p = self.x_profile
        return p(tau), p(tau, 1), p(tau, 2)

    def xddot(self, tau):
        return self.x_profile(tau, 2)

    def to_dict(self):
        return {"kind": self.kind, "l_coeffs": list(self.l_profile.coefficients),
                "x_coeffs": list(self.x_profile.coefficients), "tf": self.tf,
                "g": self.g}


SEGMENT_KINDS = {"invariant": InvariantSegment, "direct": DirectSegment}


def segment_from_dict(data: dict) -> Segment:
    data = dict(data)
    kind = data.pop("kind")
    try:
        cls = SEGMENT_KINDS[kind]
    except KeyError:
        raise InvalidInputError(f"unknown segment kind {kind!r}") from None
    return cls(**data)


# ---------------------------------------------------------------------------
# trajectories


class ControlTrajectory:
    """Concatenation of control segments plus its dense sample grid."""

    SERIES = ("l", "ldot", "lddot", "x", "xdot", "xddot", "omega2")

    def __init__(self, segments, n_grid: int = N_GRID, params=None, reports=None):
        self.segments = list(segments)
        if not self.segments:
            raise InvalidInputError("a trajectory needs at least one segment")
        self.starts = np.concatenate(
            [[0.0], np.cumsum([s.duration for s in self.segments])])
        self.tf = float(self.starts[-1])
        self.g = self.segments[0].g
        self.n_grid = int(n_grid)
        self.params = dict(params or {})
        self.reports = dict(reports or {})

    @cached_property
    def grid(self):
        t = np.linspace(0.0, self.tf, self.n_grid)
        # junctions are always sampled so splices are visible in the series
        return np.unique(np.concatenate([t, self.starts]))

    def locate(self, t):
        idx = np.searchsorted(self.starts, t, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def _piecewise(self, t, fn):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self.locate(t)
        outs = None
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if not mask.any():
                continue
            vals = fn(seg, np.clip(t[mask] - self.starts[k], 0.0, seg.duration))
            vals = vals if isinstance(vals, tuple) else (vals,)
            if outs is None:
                outs = [np.empty_like(t) for _ in vals]
            for o, v in zip(outs, vals):
                o[mask] = v
        return outs

    def omega2(self, t):
        return self._piecewise(t, lambda s, tau: s.omega2(tau))[0]

    def rope(self, t):
        return tuple(self._piecewise(t, lambda s, tau: s.rope(tau)))

    def trolley(self, t):
        return tuple(self._piecewise(t, lambda s, tau: s.trolley(np.sort(tau))))

    @cached_property
    def series(self) -> dict:
        t = self.grid
        l, ldot, lddot = self.rope(t)
        x, xdot, xddot = self.trolley(t)
        return {"t": t, "l": l, "ldot": ldot, "lddot": lddot, "x": x, "xdot": xdot,
                "xddot": xddot, "omega2": self.omega2(t)}

    @property
    def breakpoints(self):
        pts = set(self.starts.tolist())
        for start, seg in zip(self.starts, self.segments):
            pts.update(start + bp for bp in seg.breakpoints)
        return sorted(pts)

    def ermakov_residual(self):
        """Max |b'' + omega^2 b - omega0^2/b^3| over all invariant segments."""
        worst = 0.0
        for start, seg in zip(self.starts, self.segments):
            if isinstance(seg, InvariantSegment):
                tau = np.linspace(0.0, seg.duration, self.n_grid)
                worst = max(worst, float(np.abs(seg.ermakov_residual(tau)).max()))
        return worst

    def to_dict(self) -> dict:
        return {"segments": [s.to_dict() for s in self.segments],
                "n_grid": self.n_grid, "params": self.params,
                "reports": {k: v.to_dict() if hasattr(v, "to_dict") else v
                            for k, v in self.reports.items()}}

    @classmethod
    def from_dict(cls, data: dict) -> "ControlTrajectory":
        from . import dynamics  # registers the three-step segment kind
        del dynamics
        segs = [segment_from_dict(s) for s in data["segments"]]
        return cls(segs, data.get("n_grid", N_GRID), data.get("params"),
                   data.get("reports"))


# ---------------------------------------------------------------------------
# protocol builders


def design_dual_protocol(spec: ScenarioSpec, extra=(), seed=(0.0, 0.0), *,
                         n_grid: int = N_GRID, rtol: float = RTOL,
                         atol: float = ATOL, tol: float = 1e-9) -> ControlTrajectory:
    """Simultaneous hoist/lower and transport in one invariant segment."""
    a6, a7, hoist_report = solve_hoist_parameters(spec, seed, tol=tol, rtol=rtol,
                                                  atol=atol)
    b = build_b_profile(spec.l0, spec.lf, a6, a7, spec.tf)
    w2 = omega_squared_from_b(b, spec.omega0)
    b6, b7 = solve_transport_parameters(w2, spec.tf, spec.d, extra)
    seg = InvariantSegment(spec.l0, spec.lf, spec.d, spec.tf, spec.g, a6, a7, b6, b7,
                           extra, rtol=rtol, atol=atol)
    x, xdot, _ = seg.trolley(np.array([spec.tf]))
    trolley_report = DesignReport(True, {"x": float(x[0] - spec.d),
                                         "xdot": float(xdot[0])})
    params = {"a6": a6, "a7": a7, "b6": b6, "b7": b7, "extra": list(extra)}
    return ControlTrajectory([seg], n_grid, params,
                             {"hoist": hoist_report, "trolley": trolley_report})


def design_transport(l: float, d: float, tf: float, g: float = G_DEFAULT, extra=(),
                     n_grid: int = N_GRID) -> ControlTrajectory:
    """Pure transport at constant rope length (b = 1)."""
    return design_dual_protocol(ScenarioSpec(l, l, d, tf, g), extra, n_grid=n_grid)


def design_sequential_protocol(spec: ScenarioSpec, order: str = "transport-first",
                               t_transport: float | None = None,
                               t_hoist: float | None = None, *,
                               n_grid: int = N_GRID) -> ControlTrajectory:
    """Transport and hoist/lower one after the other.

    Segment durations must add up to ``spec.tf``; if only one is given the
    other takes the remainder.
    """
    if t_transport is None and t_hoist is None:
        raise InvalidInputError("give at least one segment duration")
    if t_transport is None:
        t_transport = spec.tf - t_hoist
    if t_hoist is None:
        t_hoist = spec.tf - t_transport
    if not np.isclose(t_transport + t_hoist, spec.tf, rtol=1e-12, atol=1e-12):
        raise InvalidInputError("segment durations must sum to tf")
    if t_transport <= 0 or t_hoist <= 0:
        raise InvalidInputError("segment durations must be positive")
    if order == "transport-first":
        move = design_dual_protocol(spec.replace(lf=spec.l0, tf=t_transport), n_grid=2)
        hoist = design_dual_protocol(spec.replace(d=0.0, tf=t_hoist), n_grid=2)
        hseg = hoist.segments[0]
        hseg.x_offset = spec.d
        segs = [move.segments[0], hseg]
        parts = {"transport": move, "hoist": hoist}
    elif order == "hoist-first":
        hoist = design_dual_protocol(spec.replace(d=0.0, tf=t_hoist), n_grid=2)
        move = design_dual_protocol(spec.replace(l0=spec.lf, tf=t_transport), n_grid=2)
        segs = [hoist.segments[0], move.segments[0]]
        parts = {"hoist": hoist, "transport": move}
    else:
        raise InvalidInputError(f"unknown order {order!r}")
    params = {"order": order, "t_transport": t_transport, "t_hoist": t_hoist,
              **{f"{k}_{p}": v for k, tr in parts.items() for p, v in tr.params.items()}}
    reports = {f"{k}_{r}": rep for k, tr in parts.items() for r, rep in tr.reports.items()}
    return ControlTrajectory(segs, n_grid, params, reports)

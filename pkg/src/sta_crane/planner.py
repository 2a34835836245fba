"""Constraint checks, minimal-time search and robust transport shaping.

Constraint ids follow the usual crane-planning numbering:

    1  swing angle   theta_lo <= theta(t) <= theta_hi
    2  rope length   l_lo <= l(t) <= l_hi
    3  trolley       x_lo <= x(t) <= x_hi
    4  trolley speed |x'(t)| <= v_ub        (optional)
    5  trolley acc.  |x''(t)| <= a_ub       (optional)

Minimal times live on a 0.01 s lattice. Every result carries the feasible
design at t_min and the infeasible probe one lattice step below it.
"""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .adiabatic_oracle import adiabatic_energy_exact
from .dynamics import SimulationResult, simulate_exact, simulate_harmonic
from .errors import CraneError, InvalidInputError
from .inverse_design import (
    ControlTrajectory,
    InvariantSegment,
    ScenarioSpec,
    design_dual_protocol,
    design_transport,
    solve_transport_parameters,
)
from .profiles import PolynomialProfile

log = logging.getLogger(__name__)

THETA, ROPE, TROLLEY, SPEED, ACCEL = 1, 2, 3, 4, 5
CONSTRAINT_NAMES = {THETA: "theta", ROPE: "l", TROLLEY: "x", SPEED: "xdot", ACCEL: "xddot"}

RESOLUTION = 0.01
# geometric bounds tolerate the design residuals (shooting stops at ~1e-9 l)
GEOMETRY_SLACK = 1e-7


@dataclass(frozen=True)
class ConstraintSet:
    """Bounds checked along a protocol. ``None`` means "derive from the scenario"."""

    theta_bound: float = math.radians(10.0)
    x_bounds: tuple | None = None
    l_bounds: tuple | None = None
    v_ub: float | None = None
    a_ub: float | None = None
    model: str = "exact"

    def __post_init__(self):
        if not self.theta_bound >= 0:
            raise InvalidInputError("theta bound must be non-negative")
        for name in ("x_bounds", "l_bounds"):
            b = getattr(self, name)
            if b is not None and not b[0] <= b[1]:
                raise InvalidInputError(f"{name} must be ordered, got {b}")
        for name in ("v_ub", "a_ub"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise InvalidInputError(f"{name} must be non-negative")
        if self.model not in ("exact", "harmonic"):
            raise InvalidInputError(f"unknown planning model {self.model!r}")

    def resolved(self, traj: ControlTrajectory) -> dict:
        """Map constraint id -> (lo, hi, slack) for this trajectory."""
        l_end = traj.rope([0.0, traj.tf])[0]
        x_end = traj.trolley([0.0, traj.tf])[0]
        xb = self.x_bounds or (min(x_end), max(x_end))
        lb = self.l_bounds or (0.0, float(max(l_end)))
        out = {THETA: (-self.theta_bound, self.theta_bound, 0.0),
               ROPE: (lb[0], lb[1], GEOMETRY_SLACK),
               TROLLEY: (xb[0], xb[1], GEOMETRY_SLACK)}
        if self.v_ub is not None:
            out[SPEED] = (-self.v_ub, self.v_ub, 1e-12)
        if self.a_ub is not None:
            out[ACCEL] = (-self.a_ub, self.a_ub, 1e-12)
        return out


@dataclass
class ConstraintStatus:
    worst_margin: float
    t_worst: float
    first_violation: float | None

    @property
    def violated(self) -> bool:
        return self.first_violation is not None


@dataclass
class ViolationReport:
    status: dict

    @property
    def feasible(self) -> bool:
        return not any(s.violated for s in self.status.values())

    @property
    def violated_ids(self) -> list:
        return [k for k, s in self.status.items() if s.violated]

    def margins(self) -> dict:
        return {k: s.worst_margin for k, s in self.status.items()}

    def dominant(self):
        """Violated id with the earliest violation (ties: deepest margin)."""
        bad = [(s.first_violation, s.worst_margin, k) for k, s in self.status.items()
               if s.violated]
        return min(bad)[2] if bad else None


def _swing_angle(sim: SimulationResult):
    if sim.model == "harmonic":
        def fn(t):
            q = sim.dense(t)[0]
            l = np.interp(t, sim.t, sim.l)
            return np.arcsin(np.clip(q / l, -1.0, 1.0))
    else:
        def fn(t):
            return sim.dense(t)[4]
    return fn


def _series_and_probe(traj: ControlTrajectory, sim: SimulationResult, cid):
    """Grid values plus a dense evaluator for constraint ``cid``."""
    if cid == THETA:
        return sim.t, sim.theta, _swing_angle(sim)
    t = traj.grid
    ser = traj.series
    key, fn = {ROPE: ("l", lambda t: traj.rope(t)[0]),
               TROLLEY: ("x", lambda t: traj.trolley(t)[0]),
               SPEED: ("xdot", lambda t: traj.trolley(t)[1]),
               ACCEL: ("xddot", lambda t: traj.trolley(t)[2])}[cid]
    return t, ser[key], fn


def _check_one(t, v, fn, lo, hi, slack) -> ConstraintStatus:
    margin = np.minimum(v - lo, hi - v)
    i = int(np.argmin(margin))
    worst, t_worst = float(margin[i]), float(t[i])
    # refine the extremum between the neighbouring grid points
    a, b = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
    if b > a:
        def m(s):
            val = float(np.atleast_1d(fn(np.array([s])))[0])
            return min(val - lo, hi - val)
        res = minimize_scalar(m, bounds=(a, b), method="bounded",
                              options={"xatol": 1e-9 * max(1.0, b)})
        if res.fun < worst:
            worst, t_worst = float(res.fun), float(res.x)
    bad = np.nonzero(margin < -slack)[0]
    first = float(t[bad[0]]) if bad.size else (t_worst if worst < -slack else None)
    return ConstraintStatus(worst, t_worst, first)


def check_constraints(traj: ControlTrajectory, sim: SimulationResult,
                      cs: ConstraintSet) -> ViolationReport:
    """Worst margin and first violation time of every bound in ``cs``.

    ``sim`` should start from rest (theta = theta' = 0). Bounds are checked on
    the dense grid and refined around the worst grid point.
    """
    status = {}
    for cid, (lo, hi, slack) in cs.resolved(traj).items():
        t, v, fn = _series_and_probe(traj, sim, cid)
        status[cid] = _check_one(t, v, fn, lo, hi, slack)
    return ViolationReport(status)


# ---------------------------------------------------------------------------
# minimal time


@dataclass
class Probe:
    tf: float
    feasible: bool
    active: int | None = None
    margins: dict = field(default_factory=dict)
    error: str | None = None
    trajectory: ControlTrajectory | None = field(default=None, repr=False)


@dataclass
class SegmentMinTime:
    """Minimal time of one independently designed protocol."""

    kind: str
    t_min: float | None
    active: int | None
    feasible_probe: Probe | None
    infeasible_probe: Probe | None
    monotone: dict
    n_probes: int

    @property
    def found(self) -> bool:
        return self.t_min is not None

    @property
    def monotone_ok(self) -> bool:
        return all(self.monotone.values())

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t_min": self.t_min, "active": self.active,
                "margins": self.feasible_probe.margins if self.feasible_probe else {},
                "monotone": {str(k): v for k, v in self.monotone.items()},
                "n_probes": self.n_probes}


@dataclass
class MinTimeResult:
    mode: str
    t_min: float | None
    active: int | None
    segments: dict
    totals: dict = field(default_factory=dict)
    order: str | None = None
    elapsed: float = 0.0

    @property
    def found(self) -> bool:
        return self.t_min is not None

    @property
    def margins(self) -> dict:
        return {k: s.feasible_probe.margins for k, s in self.segments.items()
                if s.feasible_probe}

    def to_dict(self) -> dict:
        return {"mode": self.mode, "t_min": self.t_min, "active": self.active,
                "order": self.order, "totals": dict(self.totals),
                "segments": {k: s.to_dict() for k, s in self.segments.items()},
                "elapsed_s": self.elapsed}


def _simulate_from_rest(traj, model, m_load=1.0):
    if model == "harmonic":
        return simulate_harmonic(traj, 0.0, 0.0, m_load=m_load)
    return simulate_exact(traj, 0.0, 0.0, m_load=m_load)


def probe_feasibility(spec: ScenarioSpec, cs: ConstraintSet, tf: float) -> Probe:
    """Design the one-segment protocol for ``spec`` at duration ``tf`` and check it."""
    try:
        traj = design_dual_protocol(spec.replace(tf=tf))
        with warnings.catch_warnings():
            # short probes may swing past pi/2; they are infeasible anyway
            warnings.simplefilter("ignore")
            sim = _simulate_from_rest(traj, cs.model, spec.m_load)
    except (CraneError, RuntimeError, FloatingPointError) as exc:
        return Probe(tf, False, None, {}, f"{type(exc).__name__}: {exc}")
    rep = check_constraints(traj, sim, cs)
    return Probe(tf, rep.feasible, rep.dominant(), rep.margins(), None, traj)


def _lattice_search(feasible, k_guess: int, k_max: int, grow: float = 1.25):
    """Smallest k with feasible(k), assuming feasibility is monotone in k.

    Brackets move by a factor ``grow`` rather than doubling: long designs can
    pick a different shooting root and turn infeasible again, so a wide jump
    may step over the first feasible window. Returns ``(k_hi, k_lo)`` with
    k_lo the infeasible neighbour (None when k_hi is the lattice floor) or
    ``(None, k_last)`` when the ceiling is reached.
    """
    def up(k):
        return min(max(k + 1, int(k * grow)), k_max)

    k = max(1, min(k_guess, k_max))
    if feasible(k):
        hi = k
        lo = min(hi - 1, int(hi / grow))
        while lo >= 1 and feasible(lo):
            hi = lo
            lo = min(hi - 1, int(hi / grow))
        if lo < 1:
            return hi, None
    else:
        lo = k
        while True:
            if lo >= k_max:
                return None, lo
            hi = up(lo)
            if feasible(hi):
                break
            lo = hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi, lo


def min_time_single(spec: ScenarioSpec, cs: ConstraintSet, kind: str = "dual", *,
                    t_guess: float | None = None, resolution: float = RESOLUTION,
                    ceiling: float = 1000.0,
                    recheck=(0.1, 0.5, 1.0)) -> SegmentMinTime:
    """Minimal duration of the one-segment invariant protocol for ``spec``."""
    cache = {}

    def probe(k):
        if k not in cache:
            cache[k] = probe_feasibility(spec, cs, round(k * resolution, 10))
            p = cache[k]
            log.debug("%s tf=%.2f feasible=%s active=%s %s", kind, p.tf, p.feasible,
                      p.active, p.error or "")
        return cache[k]

    t_guess = spec.tf if t_guess is None else t_guess
    k_hi, k_lo = _lattice_search(lambda k: probe(k).feasible,
                                 int(round(t_guess / resolution)),
                                 int(round(ceiling / resolution)))
    if k_hi is None:
        bad = probe(k_lo)
        return SegmentMinTime(kind, None, bad.active, None, bad, {}, len(cache))
    good = probe(k_hi)
    bad = probe(k_lo) if k_lo is not None else None
    monotone = {dt: probe(k_hi + int(round(dt / resolution))).feasible for dt in recheck}
    if not all(monotone.values()):
        log.warning("%s: feasibility not monotone above t_min=%.2f: %s", kind,
                    good.tf, monotone)
    active = bad.active if bad is not None else None
    return SegmentMinTime(kind, good.tf, active, good, bad, monotone, len(cache))


def min_time(spec: ScenarioSpec, cs: ConstraintSet | None = None, mode: str = "dual",
             order: str | None = None, **kw) -> MinTimeResult:
    """Minimal total time of a dual or sequential protocol.

    Sequential mode minimizes transport at l0, transport at lf and the pure
    hoist/lower independently. Totals are reported for both orders; ``order``
    selects which one becomes ``t_min`` (default: the faster).
    """
    cs = cs or ConstraintSet()
    start = time.perf_counter()
    if mode == "dual":
        seg = min_time_single(spec, cs, "dual", **kw)
        return MinTimeResult("dual", seg.t_min, seg.active, {"dual": seg},
                             elapsed=time.perf_counter() - start)
    if mode != "sequential":
        raise InvalidInputError(f"unknown mode {mode!r}")
    segs = {}
    if spec.d > 0:
        segs["transport_l0"] = min_time_single(spec.replace(lf=spec.l0), cs,
                                               "transport_l0", **kw)
        if spec.lf != spec.l0:
            segs["transport_lf"] = min_time_single(spec.replace(l0=spec.lf), cs,
                                                   "transport_lf", **kw)
    if spec.lf != spec.l0:
        segs["hoist"] = min_time_single(spec.replace(d=0.0), cs, "hoist", **kw)

    def t_of(name):
        s = segs.get(name)
        return 0.0 if s is None else s.t_min

    def total(tr, ho):
        parts = [t_of(tr), t_of(ho)]
        return None if any(p is None for p in parts) else round(sum(parts), 10)

    tr_lf = "transport_lf" if "transport_lf" in segs else "transport_l0"
    totals = {"transport-first": total("transport_l0", "hoist"),
              "hoist-first": total(tr_lf, "hoist")}
    if order is None:
        found = {k: v for k, v in totals.items() if v is not None}
        order = min(found, key=found.get) if found else "transport-first"
    elif order not in totals:
        raise InvalidInputError(f"unknown order {order!r}")
    t_min = totals[order]
    # the segment that takes longest carries the headline constraint
    used = ["transport_l0" if order == "transport-first" else tr_lf, "hoist"]
    used = [u for u in used if u in segs]
    active = None
    if used:
        active = max((segs[u] for u in used),
                     key=lambda s: -1.0 if s.t_min is None else s.t_min).active
    return MinTimeResult("sequential", t_min, active, segs, totals, order,
                         time.perf_counter() - start)


def min_time_transport_length_invariance_check(d: float, tf: float, l_a: float,
                                               l_b: float, g: float = 9.81,
                                               cs: ConstraintSet | None = None) -> dict:
    """Compare constant-length transports of equal d and tf at two rope lengths.

    The harmonic angle q/l is the same function of t at any length, so the
    angle bound gives both lengths the same minimal time. The trolley path is
    not length independent, so the x bound may bind at one length only.
    """
    cs = cs or ConstraintSet()
    runs = {}
    for name, l in (("a", l_a), ("b", l_b)):
        traj = design_transport(l, d, tf, g)
        # tight tolerances: the two runs integrate different frequencies
        sim = simulate_harmonic(traj, 0.0, 0.0, rtol=1e-13, atol=1e-15 * l)
        runs[name] = (traj, sim, check_constraints(traj, sim, cs))
    ta, tb = runs["a"][1], runs["b"][1]
    ratio_a = ta.q / l_a
    ratio_b = tb.q / l_b
    scale = max(float(np.abs(ratio_a).max()), 1e-300)
    diff = float(np.abs(ratio_a - ratio_b).max()) / scale
    ids = {k: runs[k][2].violated_ids for k in runs}
    return {
        "max_relative_difference": diff,
        "theta_identical": diff < 1e-9,
        "violations_a": ids["a"],
        "violations_b": ids["b"],
        # x binds asymmetrically: the two lengths need different minimal times
        "asymmetric_x_bound": (TROLLEY in ids["a"]) != (TROLLEY in ids["b"]),
    }


# ---------------------------------------------------------------------------
# robust transport


@dataclass
class RobustReport:
    extra: tuple
    objective: float
    objective_baseline: float
    ratios: dict
    ratios_baseline: dict
    n_evals: int
    converged: bool
    message: str
    trajectory: ControlTrajectory = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"extra": list(self.extra), "objective": self.objective,
                "objective_baseline": self.objective_baseline,
                "ratios": {f"{math.degrees(k):.6g}": v for k, v in self.ratios.items()},
                "ratios_baseline": {f"{math.degrees(k):.6g}": v
                                    for k, v in self.ratios_baseline.items()},
                "n_evals": self.n_evals, "converged": self.converged,
                "message": self.message}


def robust_alpha_optimize(spec: ScenarioSpec, theta0_grid, n_extra: int = 3, *,
                          initial_step: float = 0.05, maxfev: int = 800,
                          xatol: float = 1e-6):
    """Reshape the transport function to suppress nonlinear excitation.

    The rope schedule (b profile) is kept; ``n_extra`` monomials S^8, S^9, ...
    are added to alpha and their coefficients chosen by Nelder-Mead to
    minimize the summed |E_f - E_ad| of exact-dynamics runs started at rest
    from each angle in ``theta0_grid``. E_ad is the finite-angle adiabatic
    energy. Returns ``(alpha_profile, RobustReport)``.
    """
    grid = [float(t) for t in theta0_grid]
    if not grid:
        raise InvalidInputError("theta0 grid must not be empty")
    if n_extra < 0:
        raise InvalidInputError("n_extra must be >= 0")
    base = design_dual_protocol(spec, n_grid=3)
    seg0 = base.segments[0]
    w2 = seg0.omega2
    m, g = spec.m_load, spec.g
    e0 = [m * g * spec.l0 * (1.0 - math.cos(th)) for th in grid]
    e_ad = [adiabatic_energy_exact(spec.l0, spec.lf, e, m, g) for e in e0]
    scale = max(abs(seg0.b6), 1e-3 * max(spec.d, 1.0))
    ends = np.array([0.0, spec.tf])

    def build(u):
        extra = tuple(float(v) for v in np.asarray(u) * scale)
        b6, b7 = solve_transport_parameters(w2, spec.tf, spec.d, extra)
        seg = InvariantSegment(spec.l0, spec.lf, spec.d, spec.tf, g, seg0.a6, seg0.a7,
                               b6, b7, extra)
        return ControlTrajectory([seg], base.n_grid, {"a6": seg0.a6, "a7": seg0.a7,
                                                      "b6": b6, "b7": b7,
                                                      "extra": list(extra)})

    def evaluate(u):
        traj = build(u)
        ratios, total = {}, 0.0
        for th, e, ead in zip(grid, e0, e_ad):
            ef = simulate_exact(traj, th, m_load=m, grid=ends).Ef
            ratios[th] = ef / e
            total += abs(ef - ead)
        return total, ratios, traj

    n_evals = [0]

    def objective(u):
        n_evals[0] += 1
        try:
            return evaluate(u)[0]
        except (CraneError, RuntimeError):
            return math.inf

    f0, r0, traj0 = evaluate(np.zeros(n_extra))
    if n_extra == 0:
        return traj0.segments[0].alpha, RobustReport((), f0, f0, r0, r0, 1, True,
                                                     "no free parameters", traj0)
    simplex = np.vstack([np.zeros(n_extra), initial_step * np.eye(n_extra)])
    res = minimize(objective, np.zeros(n_extra), method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": xatol,
                            "fatol": 1e-14 * max(f0, 1e-300), "maxfev": maxfev})
    u = res.x if res.fun <= f0 else np.zeros(n_extra)
    f, ratios, traj = evaluate(u)
    seg = traj.segments[0]
    profile = PolynomialProfile(seg.alpha.coefficients, spec.tf, "m",
                                free=seg.alpha.free)
    return profile, RobustReport(tuple(seg.extra), f, f0, ratios, r0, n_evals[0] + 2,
                                 bool(res.success), str(res.message), traj)

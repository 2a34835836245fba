"""Command-line front end: design, simulate, mintime, sweep, oracle, ensemble.

Scenario files are TOML with the unit in every key name::

    [scenario]
    l0_m = 10.0
    lf_m = 5.0
    d_m = 15.0
    tf_s = 15.0

    [constraints]
    theta_bound_deg = 10.0

    [run]
    mode = "dual"
    theta0_deg = 2.0

Exit codes: 0 success, 2 unreadable input (parse errors, unknown keys, bad
ranges), 3 design non-convergence or integrator failure, 4 no feasible
protocol, 1 anything else.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .adiabatic_oracle import adiabatic_energy_exact, adiabatic_final_angle
from .dynamics import (
    ThreeStepParams,
    simulate_coupled,
    simulate_exact,
    simulate_harmonic,
    three_step_trajectory,
)
from .ensemble import compute_monodromy, microcanonical_average, monte_carlo_average
from .errors import (
    CraneError,
    DegenerateDesignError,
    DegenerateScalingError,
    InfeasibleHoistError,
    NonConvergenceError,
    OverTheTopError,
)
from .inverse_design import (
    N_GRID,
    ControlTrajectory,
    ScenarioSpec,
    design_dual_protocol,
    design_sequential_protocol,
)
from .planner import ConstraintSet, min_time

log = logging.getLogger("sta_crane")

SCHEMA_VERSION = 1

EXIT_OK, EXIT_OTHER, EXIT_PARSE, EXIT_DESIGN, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


class ScenarioError(Exception):
    """Unreadable scenario; carries a 1-based (line, column) when known."""

    def __init__(self, message, line=None, col=None):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)
        self.line, self.col = line, col


# ---------------------------------------------------------------------------
# scenario files

_SCENARIO_KEYS = {
    "l0_m": float, "lf_m": float, "d_m": float, "tf_s": float, "g_mps2": float,
    "m_load_kg": float, "M_trolley_kg": float, "friction_kgps": float,
}
_SCHEMA = {
    "name": str,
    "scenario": _SCENARIO_KEYS,
    "constraints": {
        "theta_bound_deg": float, "x_min_m": float, "x_max_m": float,
        "l_min_m": float, "l_max_m": float, "v_ub_mps": float, "a_ub_mps2": float,
        "model": str,
    },
    "run": {
        "mode": str, "order": str, "model": str, "theta0_deg": float,
        "thetadot0_degps": float, "seed": int, "grid_points": int,
        "tolerance": float, "samples": int, "E0_J": float, "t_transport_s": float,
    },
    "protocol": {
        "kind": str, "extra_m": list, "a_max_mps2": float, "period_s": float,
        "coast_s": float,
    },
    "sweep": {
        "theta0_deg": object, "tf_s": object, "l0_m": object, "lf_m": object,
        "d_m": object, "adiabatic": bool, "ensemble": bool, "samples": int,
    },
    "rows": [dict(_SCENARIO_KEYS, name=str)],
}


def _key_position(text: str, table: str | None, key: str):
    """Best-effort (line, column) of ``key`` inside ``[table]``."""
    current = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("["):
            current = line.strip("[] ")
            continue
        if current == table or (table is None and current is None):
            head = line.split("=", 1)[0].strip().strip('"')
            if "=" in line and head == key:
                return n, raw.index(line.split("=", 1)[0].strip()) + 1
    return None, None


def _coerce(value, kind, where):
    if kind is object:
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"{where}: expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise TypeError(f"{where}: expected {kind.__name__}, got {value!r}")
    return value


def _validate(doc: dict, text: str) -> dict:
    out = {}
    for top, value in doc.items():
        if top not in _SCHEMA:
            raise ScenarioError(f"unknown table or key {top!r}",
                                *_key_position(text, None, top))
        schema = _SCHEMA[top]
        if isinstance(schema, list):
            if not isinstance(value, list):
                raise ScenarioError(f"{top!r} must be an array of tables")
            rows = []
            for row in value:
                rows.append(_validate_table(row, schema[0], top, text))
            out[top] = rows
        elif isinstance(schema, dict):
            if not isinstance(value, dict):
                raise ScenarioError(f"{top!r} must be a table",
                                    *_key_position(text, None, top))
            out[top] = _validate_table(value, schema, top, text)
        else:
            try:
                out[top] = _coerce(value, schema, top)
            except TypeError as exc:
                raise ScenarioError(str(exc), *_key_position(text, None, top)) from None
    return out


def _validate_table(table: dict, schema: dict, name: str, text: str) -> dict:
    out = {}
    for key, value in table.items():
        if key not in schema:
            raise ScenarioError(f"unknown key {key!r} in [{name}]",
                                *_key_position(text, name, key))
        try:
            out[key] = _coerce(value, schema[key], f"[{name}] {key}")
        except TypeError as exc:
            raise ScenarioError(str(exc), *_key_position(text, name, key)) from None
    return out


def load_scenario(path) -> dict:
    """Parse and validate a scenario file (raises ScenarioError)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    return parse_scenario(text)


def parse_scenario(text: str) -> dict:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # tomli reports "(at line L, column C)" in its message
        raise ScenarioError(str(exc)) from None
    return _validate(doc, text)


def spec_from(table: dict, base: dict | None = None) -> ScenarioSpec:
    t = {**(base or {}), **table}
    t.pop("name", None)
    missing = [k for k in ("l0_m", "d_m", "tf_s") if k not in t]
    if missing:
        raise ScenarioError(f"[scenario] is missing {', '.join(missing)}")
    try:
        return ScenarioSpec(
            l0=t["l0_m"], lf=t.get("lf_m", t["l0_m"]), d=t["d_m"], tf=t["tf_s"],
            g=t.get("g_mps2", 9.81), m_load=t.get("m_load_kg", 1.0),
            M_trolley=t.get("M_trolley_kg", 0.0), friction=t.get("friction_kgps", 0.0))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def constraints_from(table: dict, model: str | None = None) -> ConstraintSet:
    def pair(lo, hi):
        if lo not in table and hi not in table:
            return None
        return (table.get(lo, 0.0), table.get(hi, math.inf))
    try:
        return ConstraintSet(
            theta_bound=math.radians(table.get("theta_bound_deg", 10.0)),
            x_bounds=pair("x_min_m", "x_max_m"), l_bounds=pair("l_min_m", "l_max_m"),
            v_ub=table.get("v_ub_mps"), a_ub=table.get("a_ub_mps2"),
            model=model or table.get("model", "exact"))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def parse_range(value) -> list:
    """A list of numbers, or "start:stop:step" with stop included; "" is empty."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if isinstance(value, list):
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ScenarioError(f"range list must hold numbers: {value!r}")
        return [float(v) for v in value]
    if isinstance(value, str):
        if not value.strip():
            return []
        parts = value.split(":")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ScenarioError(f"range must be 'start:stop:step', got {value!r}") from None
        if step <= 0 or not all(map(math.isfinite, (start, stop))):
            raise ScenarioError(f"bad range {value!r}")
        n = math.floor((stop - start) / step + 1e-9) + 1
        # integer multiples keep the values reproducible
        return [start + k * step for k in range(max(n, 0))]
    raise ScenarioError(f"cannot read range {value!r}")


# ---------------------------------------------------------------------------
# output helpers


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return "" if v is None else str(v)


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    _emit(path, buf.getvalue())


def _emit(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, kind, payload, started=None):
    doc = {"schema_version": SCHEMA_VERSION, "toolkit_version": __version__,
           "kind": kind, **payload}
    if started is not None:
        doc["timing"] = {"elapsed_s": time.perf_counter() - started}
    _emit(path, json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def read_summary(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError(f"{path}: unsupported schema version "
                            f"{doc.get('schema_version')!r}")
    return doc


def _out_paths(out, stem):
    if out is None:
        return None, None
    base = Path(out)
    if base.suffix:
        return base.with_suffix(".csv"), base.with_suffix(".json")
    return base / f"{stem}.csv", base / f"{stem}.json"


# ---------------------------------------------------------------------------
# commands


def _run_options(cfg, args):
    run = cfg.get("run", {})
    return {
        "model": args.model or run.get("model", "exact"),
        "seed": args.seed if args.seed is not None else run.get("seed", 0),
        "grid": args.grid_points or run.get("grid_points", N_GRID),
        "tol": args.tolerance if args.tolerance is not None else run.get("tolerance", 1e-9),
    }


def build_protocol(cfg: dict, spec: ScenarioSpec, grid: int, tol: float,
                   mode: str = "dual", order: str = "transport-first"):
    proto = cfg.get("protocol", {})
    kind = proto.get("kind", "invariant")
    if kind == "three_step":
        try:
            params = ThreeStepParams(proto["a_max_mps2"], proto["period_s"],
                                     proto["coast_s"])
        except KeyError as exc:
            raise ScenarioError(f"[protocol] three_step needs {exc.args[0]}") from None
        return three_step_trajectory(params, spec.l0, spec.g, n_grid=grid)
    if kind != "invariant":
        raise ScenarioError(f"unknown protocol kind {kind!r}")
    extra = tuple(float(e) for e in proto.get("extra_m", ()))
    if mode == "sequential":
        t_move = cfg.get("run", {}).get("t_transport_s")
        if t_move is None:
            raise ScenarioError("sequential design needs [run] t_transport_s")
        try:
            return design_sequential_protocol(spec, order, t_transport=t_move, n_grid=grid)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None
    return design_dual_protocol(spec, extra, n_grid=grid, tol=tol)


def trajectory_csv(path, traj: ControlTrajectory):
    s = traj.series
    cols = ControlTrajectory.SERIES
    write_csv(path, ("t",) + cols, zip(s["t"], *(s[c] for c in cols)))


def cmd_design(args):
    started = time.perf_counter()
    cfg = load_scenario(args.scenario)
    opts = _run_options(cfg, args)
    spec = spec_from(cfg.get("scenario", {}))
    run = cfg.get("run", {})
    traj = build_protocol(cfg, spec, opts["grid"], opts["tol"], run.get("mode", "dual"),
                          run.get("order", "transport-first"))
    csv_path, json_path = _out_paths(args.out, "trajectory")
    trajectory_csv(csv_path, traj)
    write_json(json_path, "design", {
        "scenario": spec.__dict__, "trajectory": traj.to_dict(),
        "residuals": {k: v.to_dict()["residuals"] if hasattr(v, "to_dict") else v
                      for k, v in traj.reports.items()},
        "ermakov_residual": traj.ermakov_residual(),
    }, started)
    return EXIT_OK


def simulate(traj: ControlTrajectory, model: str, theta0: float, thetadot0: float = 0.0,
             m_load: float = 1.0, M: float = 0.0, friction: float = 0.0):
    if model == "harmonic":
        l0 = float(traj.rope([0.0])[0][0])
        return simulate_harmonic(traj, l0 * math.sin(theta0),
                                 l0 * math.cos(theta0) * thetadot0, m_load=m_load)
    if model == "coupled":
        return simulate_coupled(traj, theta0, thetadot0, m_load=m_load, M=M,
                                friction=friction)
    if model == "exact":
        return simulate_exact(traj, theta0, thetadot0, m_load=m_load)
    raise ScenarioError(f"unknown model {model!r}")


def energy_references(traj: ControlTrajectory, E0: float, m_load: float) -> dict:
    l0, lf = (float(v) for v in traj.rope([0.0, traj.tf])[0])
    g = traj.g
    small = E0 * math.sqrt(l0 / lf)
    try:
        exact = adiabatic_energy_exact(l0, lf, E0, m_load, g)
    except (OverTheTopError, CraneError):
        exact = float("nan")
    return {"E_ad_small": small, "E_ad_exact": exact}


def cmd_simulate(args):
    started = time.perf_counter()
    doc = read_summary(args.trajectory)
    traj = ControlTrajectory.from_dict(doc["trajectory"])
    model = args.model or "exact"
    res = simulate(traj, model, math.radians(args.theta0_deg),
                   math.radians(args.thetadot0_degps), args.m_load_kg, args.M_trolley_kg,
                   args.friction_kgps)
    P = res.extras.get("P", np.full_like(res.t, np.nan))
    csv_path, json_path = _out_paths(args.out, "simulation")
    write_csv(csv_path, ("t", "theta", "thetadot", "q", "qdot", "E", "P"),
              zip(res.t, res.theta, res.thetadot, res.q, res.qdot, res.E, P))
    refs = energy_references(traj, res.E0, res.m_load)
    summary = res.summary()
    summary.update(refs)
    summary["Ef_over_Ead"] = res.Ef / refs["E_ad_exact"] if refs["E_ad_exact"] else float("nan")
    write_json(json_path, "simulation", {"summary": summary,
                                         "theta0_deg": args.theta0_deg}, started)
    return EXIT_OK


def _tag(seg):
    if seg is None:
        return ""
    if seg.t_min is None:
        return "infeasible"
    return f"{seg.t_min:.2f}^({seg.active})" if seg.active else f"{seg.t_min:.2f}"


MINTIME_HEADER = ("name", "d_m", "l0_m", "lf_m", "transport_l0_s", "transport_l0_id",
                  "transport_lf_s", "transport_lf_id", "hoist_s", "hoist_id",
                  "sequential_transport_first_s", "sequential_hoist_first_s",
                  "dual_s", "dual_id")


def mintime_rows(cfg: dict, cs: ConstraintSet):
    base = cfg.get("scenario", {})
    rows = cfg.get("rows") or [{}]
    out = []
    for k, row in enumerate(rows):
        spec = spec_from(row, base)
        name = row.get("name", f"row{k + 1}")
        seq = min_time(spec, cs, "sequential")
        dual = min_time(spec, cs, "dual")
        out.append((name, spec, seq, dual))
    return out


def cmd_mintime(args):
    started = time.perf_counter()
    cfg = load_scenario(args.scenario)
    opts = _run_options(cfg, args)
    model = opts["model"] if opts["model"] != "coupled" else "exact"
    cs = constraints_from(cfg.get("constraints", {}), model)
    results = mintime_rows(cfg, cs)
    table, text = [], []
    text.append(f"{'name':<10}{'d':>6}{'dl':>6}{'transport':>22}{'hoist':>12}"
                f"{'total':>16}{'dual':>12}")
    infeasible = False
    for name, spec, seq, dual in results:
        s = seq.segments
        get = lambda k, a: getattr(s[k], a) if k in s else None  # noqa: E731
        table.append((name, spec.d, spec.l0, spec.lf,
                      get("transport_l0", "t_min"), get("transport_l0", "active"),
                      get("transport_lf", "t_min"), get("transport_lf", "active"),
                      get("hoist", "t_min"), get("hoist", "active"),
                      seq.totals.get("transport-first"), seq.totals.get("hoist-first"),
                      dual.t_min, dual.active))
        infeasible |= dual.t_min is None or seq.t_min is None
        tr = _tag(s.get("transport_l0"))
        if "transport_lf" in s and s["transport_lf"].t_min != s["transport_l0"].t_min:
            tr += " / " + _tag(s["transport_lf"])
        totals = " / ".join(fmt_total(v) for v in dict.fromkeys(seq.totals.values()))
        text.append(f"{name:<10}{spec.d:>6g}{spec.lf - spec.l0:>6g}{tr:>22}"
                    f"{_tag(s.get('hoist')):>12}{totals:>16}{_tag(dual.segments['dual']):>12}")
    csv_path, json_path = _out_paths(args.out, "mintime")
    if csv_path is not None:
        write_csv(csv_path, MINTIME_HEADER, table)
        write_json(json_path, "mintime", {
            "constraints": {"theta_bound_deg": math.degrees(cs.theta_bound),
                            "x_bounds_m": cs.x_bounds, "l_bounds_m": cs.l_bounds,
                            "v_ub_mps": cs.v_ub, "a_ub_mps2": cs.a_ub, "model": cs.model},
            "rows": [{"name": n, "scenario": sp.__dict__, "sequential": q.to_dict(),
                      "dual": d.to_dict()} for n, sp, q, d in results]}, started)
    sys.stdout.write("\n".join(text) + "\n")
    if infeasible:
        log.error("no feasible protocol for at least one row")
        return EXIT_INFEASIBLE
    return EXIT_OK


def fmt_total(v):
    return "infeasible" if v is None else f"{v:.2f}"


def _sweep_header(adiabatic, ensemble, samples):
    h = ["protocol", "l0_m", "lf_m", "d_m", "tf_s", "theta0_deg", "model", "E0_J",
         "Ef_J", "Ef_over_E0", "thetamax_final_deg"]
    if adiabatic:
        h += ["thetamax_adiabatic_deg", "Ead_J", "Ef_over_Ead"]
    if ensemble:
        h += ["ensemble_mean_J", "ensemble_variance_J2", "ensemble_Ead_J"]
        if samples:
            h += ["mc_mean_J", "mc_variance_J2"]
    return h


def sweep_rows(cfg: dict, model: str, seed: int, grid: int, tol: float):
    sw = cfg.get("sweep", {})
    base = cfg.get("scenario", {})
    axes = {}
    for key in ("l0_m", "lf_m", "d_m", "tf_s"):
        axes[key] = parse_range(sw[key]) if key in sw else [None]
    thetas = parse_range(sw.get("theta0_deg", [0.0]))
    adiabatic, ensemble = sw.get("adiabatic", False), sw.get("ensemble", False)
    samples = sw.get("samples", 0)
    header = _sweep_header(adiabatic, ensemble, samples)
    kind = cfg.get("protocol", {}).get("kind", "invariant")
    rows = []
    for l0, lf, d, tf in itertools.product(*axes.values()):
        over = {k: v for k, v in zip(axes, (l0, lf, d, tf)) if v is not None}
        if l0 is not None and lf is None and "lf_m" not in base:
            over["lf_m"] = l0
        spec = spec_from(over, base)
        traj = build_protocol(cfg, spec, grid, tol)
        l_start, l_end = (float(v) for v in traj.rope([0.0, traj.tf])[0])
        ens = None
        if ensemble:
            phi = compute_monodromy(traj, m_load=spec.m_load)
        for th_deg in thetas:
            th = math.radians(th_deg)
            res = simulate(traj, model, th, 0.0, spec.m_load, spec.M_trolley, spec.friction)
            th_max = res.theta_max_final
            row = [kind, l_start, l_end, spec.d, traj.tf, th_deg, model, res.E0, res.Ef,
                   res.Ef / res.E0 if res.E0 else float("nan"), math.degrees(th_max)]
            if adiabatic:
                try:
                    th_ad = (adiabatic_final_angle(l_start, l_end, abs(th), spec.m_load,
                                                   spec.g) if th else 0.0)
                    ead = adiabatic_energy_exact(l_start, l_end, res.E0, spec.m_load, spec.g)
                except (OverTheTopError, CraneError):
                    th_ad = ead = float("nan")
                row += [math.degrees(th_ad), ead, res.Ef / ead if ead else float("nan")]
            if ensemble:
                w0, wf = math.sqrt(spec.g / l_start), math.sqrt(spec.g / l_end)
                ens = microcanonical_average(phi, res.E0, w0, wf, spec.m_load)
                row += [ens.Ef_mean, ens.variance, ens.E_ad]
                if samples:
                    mean, var = monte_carlo_average(traj, res.E0, samples, seed,
                                                    spec.m_load)
                    row += [mean, var]
            rows.append(row)
    return header, rows


def cmd_sweep(args):
    cfg = load_scenario(args.scenario)
    opts = _run_options(cfg, args)
    header, rows = sweep_rows(cfg, opts["model"], opts["seed"], opts["grid"], opts["tol"])
    out = args.out
    if out is not None and not Path(out).suffix:
        out = Path(out) / "sweep.csv"
    write_csv(out, header, rows)
    return EXIT_OK


def cmd_oracle(args):
    thetas = parse_range(args.theta0_deg)
    rows = []
    for th in thetas:
        if th == 0:
            rows.append((th, 0.0))
            continue
        sign = math.copysign(1.0, th)
        try:
            val = adiabatic_final_angle(args.l0_m, args.lf_m, math.radians(abs(th)),
                                        1.0, args.g_mps2, args.method)
            rows.append((th, sign * math.degrees(val)))
        except OverTheTopError:
            rows.append((th, float("nan")))
    write_csv(args.out, ("theta0_deg", "thetamax_adiabatic_deg"), rows)
    return EXIT_OK


def cmd_ensemble(args):
    started = time.perf_counter()
    if args.trajectory:
        traj = ControlTrajectory.from_dict(read_summary(args.trajectory)["trajectory"])
        m_load = args.m_load_kg
        E0, samples, seed = args.E0_J, args.samples, args.seed or 0
    else:
        if not args.scenario:
            raise ScenarioError("give --trajectory or --scenario")
        cfg = load_scenario(args.scenario)
        opts = _run_options(cfg, args)
        run = cfg.get("run", {})
        spec = spec_from(cfg.get("scenario", {}))
        traj = build_protocol(cfg, spec, opts["grid"], opts["tol"])
        m_load = spec.m_load
        E0 = args.E0_J if args.E0_J is not None else run.get("E0_J", 1.0)
        samples = args.samples if args.samples is not None else run.get("samples", 0)
        seed = opts["seed"]
    E0 = 1.0 if E0 is None else E0
    l0, lf = (float(v) for v in traj.rope([0.0, traj.tf])[0])
    g = traj.g
    phi = compute_monodromy(traj, m_load=m_load)
    summ = microcanonical_average(phi, E0, math.sqrt(g / l0), math.sqrt(g / lf), m_load)
    payload = {"monodromy": {"matrix": phi.matrix, "det": phi.det,
                             "offset": [phi.offset_q, phi.offset_p]},
               "closed_form": summ.to_dict(), "seed": seed, "samples": samples or 0}
    if samples:
        mean, var = monte_carlo_average(traj, E0, samples, seed, m_load)
        sigma = math.sqrt(var / samples)
        payload["monte_carlo"] = {"mean": mean, "variance": var, "stderr": sigma}
    write_json(args.out, "ensemble", payload, started)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _configure_logging():
    level = os.environ.get("SWAY_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    logging.basicConfig(level=level if level else "WARNING",
                        format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file or directory (default: stdout)")
    common.add_argument("--model", choices=("exact", "harmonic", "coupled"))
    common.add_argument("--seed", type=int)
    common.add_argument("--grid-points", type=int, dest="grid_points")
    common.add_argument("--tolerance", type=float, help="shooting tolerance")

    p = argparse.ArgumentParser(prog="sta-crane",
                                description="Shortcut protocols for overhead cranes")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", parents=[common], help="design a protocol")
    d.add_argument("--scenario", required=True)
    d.set_defaults(func=cmd_design)

    s = sub.add_parser("simulate", parents=[common], help="simulate a designed protocol")
    s.add_argument("--trajectory", required=True, help="JSON written by design")
    s.add_argument("--theta0-deg", type=float, default=0.0, dest="theta0_deg")
    s.add_argument("--thetadot0-degps", type=float, default=0.0, dest="thetadot0_degps")
    s.add_argument("--m-load-kg", type=float, default=1.0, dest="m_load_kg")
    s.add_argument("--M-trolley-kg", type=float, default=0.0, dest="M_trolley_kg")
    s.add_argument("--friction-kgps", type=float, default=0.0, dest="friction_kgps")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mintime", parents=[common], help="minimal times, dual vs sequential")
    m.add_argument("--scenario", required=True)
    m.set_defaults(func=cmd_mintime)

    w = sub.add_parser("sweep", parents=[common], help="parameter sweep to CSV")
    w.add_argument("--scenario", required=True)
    w.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oracle", parents=[common], help="adiabatic final angles")
    o.add_argument("--l0-m", type=float, required=True, dest="l0_m")
    o.add_argument("--lf-m", type=float, required=True, dest="lf_m")
    o.add_argument("--theta0-deg", default="1:20:1", dest="theta0_deg",
                   help="'start:stop:step' (default 1:20:1)")
    o.add_argument("--g-mps2", type=float, default=9.81, dest="g_mps2")
    o.add_argument("--method", choices=("quadrature", "elliptic"), default="quadrature")
    o.set_defaults(func=cmd_oracle)

    e = sub.add_parser("ensemble", parents=[common], help="microcanonical averages")
    e.add_argument("--scenario")
    e.add_argument("--trajectory")
    e.add_argument("--E0-J", type=float, dest="E0_J")
    e.add_argument("--samples", type=int)
    e.add_argument("--m-load-kg", type=float, default=1.0, dest="m_load_kg")
    e.set_defaults(func=cmd_ensemble)
    return p


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NonConvergenceError, InfeasibleHoistError, DegenerateScalingError,
            DegenerateDesignError, RuntimeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        best = getattr(exc, "best_residual", None)
        if best is not None:
            print(f"best residual: {list(np.atleast_1d(best))}", file=sys.stderr)
        return EXIT_DESIGN


if __name__ == "__main__":
    sys.exit(main())

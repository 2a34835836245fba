import csv
import json
import math

import numpy as np
import pytest

from sta_crane import planner_cli as cli
from sta_crane.dynamics import simulate_exact
from sta_crane.inverse_design import ControlTrajectory, ScenarioSpec, design_dual_protocol

HOIST = """\
[scenario]
l0_m = 10.0
lf_m = 5.0
d_m = 15.0
tf_s = 15.0
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_design_writes_series_and_summary(tmp_path):
    scen = write(tmp_path, "s.toml", HOIST)
    assert cli.main(["design", "--scenario", scen, "--out", str(tmp_path / "d")]) == 0
    rows = read_csv(tmp_path / "d" / "trajectory.csv")
    assert rows[0] == ["t", "l", "ldot", "lddot", "x", "xdot", "xddot", "omega2"]
    data = np.array(rows[1:], dtype=float)
    ref = design_dual_protocol(ScenarioSpec(10, 5, 15, 15)).series
    np.testing.assert_array_equal(data[:, 1], ref["l"])
    np.testing.assert_array_equal(data[:, 4], ref["x"])
    summary = json.loads((tmp_path / "d" / "trajectory.json").read_text())
    assert summary["schema_version"] == cli.SCHEMA_VERSION
    assert abs(summary["residuals"]["trolley"]["x"]) < 1e-9
    assert summary["ermakov_residual"] < 1e-8


def test_trivial_design(tmp_path):
    scen = write(tmp_path, "s.toml", "[scenario]\nl0_m = 3.0\nd_m = 0.0\ntf_s = 2.0\n")
    assert cli.main(["design", "--scenario", scen, "--out", str(tmp_path / "d")]) == 0
    data = np.array(read_csv(tmp_path / "d" / "trajectory.csv")[1:], dtype=float)
    assert np.all(data[:, 1] == 3.0) and not np.any(data[:, 4])


def test_design_then_simulate_round_trip(tmp_path):
    scen = write(tmp_path, "s.toml", HOIST.replace("tf_s = 15.0", "tf_s = 10.0"))
    cli.main(["design", "--scenario", scen, "--out", str(tmp_path / "d")])
    rc = cli.main(["simulate", "--trajectory", str(tmp_path / "d" / "trajectory.json"),
                   "--theta0-deg", "3", "--out", str(tmp_path / "s")])
    assert rc == 0
    data = np.array(read_csv(tmp_path / "s" / "simulation.csv")[1:], dtype=float)
    doc = json.loads((tmp_path / "d" / "trajectory.json").read_text())
    spec = ScenarioSpec(**doc["scenario"])
    in_process = simulate_exact(design_dual_protocol(spec), math.radians(3))
    np.testing.assert_array_equal(data[:, 1], in_process.theta)
    np.testing.assert_array_equal(data[:, 5], in_process.E)
    summary = json.loads((tmp_path / "s" / "simulation.json").read_text())["summary"]
    assert summary["Ef_over_E0"] == in_process.energy_ratio


def test_frozen_controls_give_zero_angles(tmp_path):
    scen = write(tmp_path, "s.toml", "[scenario]\nl0_m = 3.0\nd_m = 0.0\ntf_s = 2.0\n")
    cli.main(["design", "--scenario", scen, "--out", str(tmp_path / "d")])
    cli.main(["simulate", "--trajectory", str(tmp_path / "d" / "trajectory.json"),
              "--out", str(tmp_path / "s"), "--model", "coupled"])
    data = np.array(read_csv(tmp_path / "s" / "simulation.csv")[1:], dtype=float)
    assert not np.any(data[:, 1])


def test_unknown_key_reports_position(tmp_path, capsys):
    scen = write(tmp_path, "s.toml", HOIST + "mass_kg = 3\n")
    assert cli.main(["design", "--scenario", scen]) == 2
    err = capsys.readouterr().err
    assert "line 6, column 1" in err and "mass_kg" in err


def test_syntax_error_reports_position(tmp_path, capsys):
    scen = write(tmp_path, "s.toml", "[scenario\nl0_m = 1\n")
    assert cli.main(["design", "--scenario", scen]) == 2
    assert "line 1" in capsys.readouterr().err


@pytest.mark.parametrize("text", [
    HOIST.replace("10.0", '"ten"'),
    "[scenario]\nl0_m = -1.0\nd_m = 1.0\ntf_s = 1.0\n",
    "[scenario]\nl0_m = 1.0\n",
    HOIST + "[extra]\nfoo = 1\n",
])
def test_invalid_scenarios(tmp_path, text):
    assert cli.main(["design", "--scenario", write(tmp_path, "s.toml", text)]) == 2


def test_missing_file():
    assert cli.main(["design", "--scenario", "/nonexistent/s.toml"]) == 2


def test_design_failure_exit_code(tmp_path, capsys):
    scen = write(tmp_path, "s.toml", HOIST + "[run]\ntolerance = 1e-30\n")
    assert cli.main(["design", "--scenario", scen]) == 3
    assert "residual" in capsys.readouterr().err


def test_infeasible_mintime(tmp_path):
    scen = write(tmp_path, "s.toml", "[scenario]\nl0_m = 5.0\nd_m = 15.0\ntf_s = 9.0\n"
                 "[constraints]\ntheta_bound_deg = 0.0\n")
    assert cli.main(["mintime", "--scenario", scen]) == 4


def test_single_row_matches_batch(tmp_path):
    base = "[scenario]\nl0_m = 5.0\ntf_s = 6.0\ng_mps2 = 9.8\n"
    one = base + "[[rows]]\nname = \"b\"\nd_m = 5.0\nlf_m = 8.0\n"
    both = base + ("[[rows]]\nname = \"a\"\nd_m = 4.0\n"
                   "[[rows]]\nname = \"b\"\nd_m = 5.0\nlf_m = 8.0\n")
    cli.main(["mintime", "--scenario", write(tmp_path, "1.toml", one),
              "--out", str(tmp_path / "one.csv")])
    cli.main(["mintime", "--scenario", write(tmp_path, "2.toml", both),
              "--out", str(tmp_path / "both.csv")])
    assert read_csv(tmp_path / "one.csv")[1] == read_csv(tmp_path / "both.csv")[2]


SWEEP = """\
[scenario]
l0_m = 10.0
lf_m = 5.0
d_m = 0.0
tf_s = 5.0
[sweep]
theta0_deg = "2:6:2"
tf_s = [5.0, 7.0]
adiabatic = true
ensemble = true
samples = 50
"""


def test_sweep_is_deterministic(tmp_path):
    scen = write(tmp_path, "s.toml", SWEEP)
    for name in ("a.csv", "b.csv"):
        assert cli.main(["sweep", "--scenario", scen, "--seed", "4",
                         "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    rows = read_csv(tmp_path / "a.csv")
    assert len(rows) == 1 + 3 * 2
    head = rows[0]
    assert {"thetamax_adiabatic_deg", "ensemble_mean_J", "mc_mean_J"} <= set(head)
    # lattice values are exact multiples of the step
    assert [r[head.index("theta0_deg")] for r in rows[1:4]] == ["2", "4", "6"]


def test_empty_range_gives_header_only(tmp_path):
    scen = write(tmp_path, "s.toml", SWEEP.replace('"2:6:2"', '""'))
    assert cli.main(["sweep", "--scenario", scen, "--out", str(tmp_path / "e.csv")]) == 0
    assert len(read_csv(tmp_path / "e.csv")) == 1


@pytest.mark.parametrize("bad", ['"1:x:2"', '"1:5:0"', '"1:5"', "true"])
def test_bad_range(tmp_path, bad):
    scen = write(tmp_path, "s.toml", SWEEP.replace('"2:6:2"', bad))
    assert cli.main(["sweep", "--scenario", scen]) == 2


def test_oracle_table(tmp_path):
    out = tmp_path / "o.csv"
    assert cli.main(["oracle", "--l0-m", "10", "--lf-m", "5", "--theta0-deg", "0:2:1",
                     "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["theta0_deg", "thetamax_adiabatic_deg"]
    assert float(rows[2][1]) == pytest.approx(2**0.75, rel=1e-4)
    assert float(rows[1][1]) == 0.0


def test_ensemble_command(tmp_path):
    scen = write(tmp_path, "s.toml", HOIST + "[run]\nsamples = 40\nseed = 2\n")
    out = tmp_path / "e.json"
    assert cli.main(["ensemble", "--scenario", scen, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert abs(doc["monodromy"]["det"] - 1) < 1e-9
    assert doc["closed_form"]["Ef_mean"] == pytest.approx(math.sqrt(2), rel=1e-8)
    assert doc["monte_carlo"]["mean"] == pytest.approx(math.sqrt(2), rel=1e-8)


def test_three_step_protocol_from_scenario(tmp_path):
    scen = write(tmp_path, "s.toml", """\
[scenario]
l0_m = 1.2
d_m = 4.0
tf_s = 6.45
g_mps2 = 9.8
[protocol]
kind = "three_step"
a_max_mps2 = 0.4276
period_s = 2.1987
coast_s = 2.0567
[sweep]
theta0_deg = [-10.0, 0.0, 10.0]
""")
    assert cli.main(["sweep", "--scenario", scen, "--model", "harmonic",
                     "--out", str(tmp_path / "w.csv")]) == 0
    rows = read_csv(tmp_path / "w.csv")
    assert len(rows) == 4 and rows[1][0] == "three_step"


def test_summary_schema_is_checked(tmp_path):
    bad = tmp_path / "t.json"
    bad.write_text(json.dumps({"schema_version": 99, "trajectory": {}}))
    assert cli.main(["simulate", "--trajectory", str(bad)]) == 2


def test_float_format_round_trips():
    for v in (0.1, 1 / 3, -2.5e-300, 6.02214076e23, math.pi):
        assert float(cli.fmt(v)) == v
    assert cli.fmt(True) == "true" and cli.fmt(None) == ""


def test_trajectory_json_round_trip_is_exact(tmp_path):
    traj = design_dual_protocol(ScenarioSpec(5, 10, 15, 10))
    text = json.dumps(traj.to_dict())
    again = ControlTrajectory.from_dict(json.loads(text))
    assert json.dumps(again.to_dict()) == text

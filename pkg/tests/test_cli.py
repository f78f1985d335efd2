import csv
import json
import subprocess
import sys

import pytest

from turfsim.cli import ANALYZE_HEADER, main
from turfsim.config import TEN_AREA_REVENUES, load_config
from turfsim.engine import replay_check
from turfsim.events import EVENT_CSV_HEADER, EventLog
from turfsim.metrics import METRICS_CSV_HEADER
from turfsim.regime import BoundaryWarning
from turfsim.sweep import SWEEP_CSV_HEADER

THREE = """n_ocgs = 3
revenues = [30.0, 20.0, 10.0]
departure_rate = 15.0
collision_cost = 1.0
horizon = 400.0
"""

TEN_AREA = f"""n_ocgs = 10
revenues = {list(TEN_AREA_REVENUES)}
departure_rate = 10.0
collision_cost = 5.0
horizon = 300.0
seed = 4
"""

FAST = ["--max-iter", "5"]


@pytest.fixture
def three(tmp_path):
    p = tmp_path / "three.toml"
    p.write_text(THREE + "seed = 3\n")
    return p


@pytest.fixture
def ten_area(tmp_path):
    p = tmp_path / "ten_area.toml"
    p.write_text(TEN_AREA)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def read_dicts(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_thresholds_ten_area(ten_area, capsys):
    assert main(["thresholds", str(ten_area)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["eta_upper"] == pytest.approx(29.4)
    assert doc["eta_lower"] == pytest.approx(9.6)
    assert doc["gap_ratios"][-1] == pytest.approx(0.6)
    assert doc["regime"] == "Intermediate"


def test_thresholds_three_and_boundary(three, capsys):
    assert main(["thresholds", str(three)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert (doc["eta_lower"], doc["eta_upper"]) == (10.0, 20.0)
    with pytest.warns(BoundaryWarning):
        assert main(["thresholds", str(three), "--eta", "20"]) == 0
    assert json.loads(capsys.readouterr().out)["regime"] == "FullPropertyRights"


def test_simulate_ten_area_outputs(ten_area, tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", str(ten_area), "-o", str(out), *FAST]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["events.csv", "metrics.csv", "metrics.json", "stationary.json"]
    rows = read_csv(out / "metrics.csv")
    assert tuple(rows[0]) == METRICS_CSV_HEADER and len(rows) == 11
    assert tuple(read_csv(out / "events.csv")[0]) == EVENT_CSV_HEADER
    cfg = load_config(ten_area)
    assert replay_check(EventLog.read_csv(out / "events.csv"), cfg)
    metrics = json.loads((out / "metrics.json").read_text())
    assert {"areas", "total_collisions", "cumulative_payoff", "measured_window"} <= set(metrics)
    assert len(metrics["areas"]) == 10
    for a in metrics["areas"]:
        assert 0 <= a["occupancy_fraction"] <= 1 and a["violence_rate"] >= 0
    st = json.loads((out / "stationary.json").read_text())
    assert set(st) == {"p", "iterations_used", "converged", "residual"} and len(st["p"]) == 10


def test_simulate_eta_zero(three, tmp_path):
    out = tmp_path / "z"
    assert main(["simulate", str(three), "-o", str(out), "--eta", "0"]) == 0
    assert read_csv(out / "events.csv") == [list(EVENT_CSV_HEADER)]
    for row in read_csv(out / "metrics.csv")[1:]:
        assert [float(x) for x in row[2:]] == [0.0, 0.0, 0.0, 0.0]


def test_simulate_is_deterministic(three, tmp_path):
    for name in ("a", "b"):
        assert main(["simulate", str(three), "-o", str(tmp_path / name), *FAST]) == 0
    for f in ("events.csv", "metrics.csv", "metrics.json", "stationary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "noseed.toml"
    cfg.write_text(THREE)
    monkeypatch.setenv("TURFSIM_SEED", "3")
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "env"), *FAST]) == 0
    withseed = tmp_path / "seeded.toml"
    withseed.write_text(THREE + "seed = 3\n")
    monkeypatch.setenv("TURFSIM_SEED", "99")
    assert main(["simulate", str(withseed), "-o", str(tmp_path / "file"), *FAST]) == 0
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "flag"), "--seed", "3", *FAST]) == 0
    ref = (tmp_path / "env" / "events.csv").read_bytes()
    assert (tmp_path / "file" / "events.csv").read_bytes() == ref
    assert (tmp_path / "flag" / "events.csv").read_bytes() == ref
    monkeypatch.delenv("TURFSIM_SEED")
    assert main(["simulate", str(cfg), "-o", str(tmp_path / "default"), *FAST]) == 0
    assert (tmp_path / "default" / "events.csv").read_bytes() != ref


def test_bad_env_seed(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "noseed.toml"
    cfg.write_text(THREE)
    monkeypatch.setenv("TURFSIM_SEED", "abc")
    assert main(["thresholds", str(cfg)]) == 2
    assert "seed" in capsys.readouterr().err


@pytest.mark.parametrize(
    "text,field",
    [
        (THREE.replace("[30.0, 20.0, 10.0]", "[10.0, 20.0, 30.0]"), "revenues"),
        (THREE.replace("horizon = 400.0", "horizon = -1.0"), "horizon"),
        (THREE + "speed = 2\n", "speed"),
        (THREE.replace("n_ocgs = 3\n", ""), "n_ocgs"),
        (THREE.replace("15.0", '"fast"'), "departure_rate"),
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, text, field):
    p = tmp_path / "bad.toml"
    p.write_text(text)
    for cmd in (["simulate", str(p), "-o", str(tmp_path / "o")], ["thresholds", str(p)]):
        assert main(cmd) == 2
        assert field in capsys.readouterr().err


def test_invalid_toml_exit_2(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("n_ocgs = = 3")
    assert main(["thresholds", str(p)]) == 2


def test_io_errors_exit_3(three, tmp_path):
    assert main(["thresholds", str(tmp_path / "missing.toml")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", str(three), "-o", str(blocker / "sub"), *FAST]) == 3
    assert main(["analyze", str(tmp_path / "missing.csv")]) == 3


def test_sweep_single_point_matches_simulate(three, tmp_path):
    assert main(["simulate", str(three), "-o", str(tmp_path / "sim"), *FAST]) == 0
    assert main(["sweep", str(three), "-o", str(tmp_path / "sw"), "--grid", "15", "--seeds", "1", "-j", "1", *FAST]) == 0
    sim = read_csv(tmp_path / "sim" / "metrics.csv")[1:]
    sweep = read_dicts(tmp_path / "sw" / "sweep.csv")
    assert [r["O_mean"] for r in sweep] == [row[2] for row in sim]
    assert [r["V_mean"] for r in sweep] == [row[3] for row in sim]
    assert [r["R_mean"] for r in sweep] == [row[4] for row in sim]
    side = json.loads((tmp_path / "sw" / "sweep_points.json").read_text())
    stationary = json.loads((tmp_path / "sim" / "stationary.json").read_text())
    assert side["points"][0]["stationary"] == stationary


def test_sweep_check_outputs(three, tmp_path):
    out = tmp_path / "sw"
    args = ["sweep", str(three), "-o", str(out), "--grid", "9.5,10.5,19.5,20.5", "--seeds", "2", "--check", *FAST]
    assert main(args) == 0
    rows = read_dicts(out / "sweep.csv")
    assert tuple(rows[0]) == SWEEP_CSV_HEADER and len(rows) == 12
    assert [r["regime"] for r in rows[::3]] == ["NoPropertyRights", "Intermediate", "Intermediate", "FullPropertyRights"]
    doc = json.loads((out / "verdicts.json").read_text())
    assert {"thresholds", "alpha", "eps", "propositions", "corollaries", "failed_points"} <= set(doc)
    assert len(doc["propositions"]) == 4
    assert doc["corollaries"]["kind"] == "corollaries" and doc["corollaries"]["clauses"]


def test_sweep_check_without_pairs(three, tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", str(three), "-o", str(out), "--grid", "5", "--seeds", "1", "--check", *FAST]) == 0
    doc = json.loads((out / "verdicts.json").read_text())
    assert "skipped" in doc["corollaries"] and "skipped" in doc["propositions"][0]


@pytest.mark.parametrize("extra", [["--grid", "3,1"], ["--seeds", "0"], ["--eps", "0"], ["--jobs", "0"]])
def test_sweep_bad_arguments(three, tmp_path, extra):
    assert main(["sweep", str(three), "-o", str(tmp_path / "x"), *extra]) == 2


def test_analyze(tmp_path, capsys):
    f = tmp_path / "d.csv"
    f.write_text("day,area_id,ocg_id\n1,0,5\n3,0,5\n5,0,7\n2,1,1\n")
    out = tmp_path / "a.csv"
    assert main(["analyze", str(f), "-o", str(out)]) == 0
    rows = read_csv(out)
    assert tuple(rows[0]) == ANALYZE_HEADER
    assert rows[1] == ["0", "2", "3", "1", "4.0", "4"]
    assert rows[2] == ["1", "1", "1", "0", "", ""]
    assert main(["analyze", str(f), "--include-censored"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "0,2,3,2,2.5,4" and lines[2] == "1,1,1,1,1.0,1"


def test_analyze_empty_and_errors(tmp_path, capsys):
    f = tmp_path / "d.csv"
    f.write_text("day,area_id,ocg_id\n")
    assert main(["analyze", str(f)]) == 0
    assert capsys.readouterr().out.splitlines() == [",".join(ANALYZE_HEADER)]
    f.write_text("day,area_id,area_id\n")
    assert main(["analyze", str(f)]) == 2
    f.write_text("day,area_id,ocg_id\n1,0,5\n2,zero,5\n")
    assert main(["analyze", str(f)]) == 2
    assert "line 3" in capsys.readouterr().err


def test_console_script(ten_area, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "turfsim.cli", "thresholds", str(ten_area)], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["regime"] == "Intermediate"
    proc = subprocess.run([sys.executable, "-m", "turfsim.cli"], capture_output=True, text=True, check=False)
    assert proc.returncode == 2

"""End-to-end command-line behaviour, file formats and exit codes."""

import csv
import json
import math

import numpy as np
import pytest

from hazboost import (
    AxisSpec,
    BoostFit,
    PiecewiseLogHazard,
    Schedule,
    build_grid,
    ingest_csv,
    save_model,
    simulate,
    true_hazard_table,
)
from hazboost.cli import main
from hazboost.simqueue import SimConfig, service_rate


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def sim_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sim.csv"
    rc = run("simulate", "--seed", 12, "--completions", 250, "--out", path)
    assert rc == 0
    return path


def _truth_model(tmp_path, divisions=8):
    """A saved model whose coefficients equal the log of the true rate."""
    data, _ = simulate(SimConfig(seed=30, completions=150))
    grid = build_grid(
        [AxisSpec.uniform(divisions), AxisSpec.categorical([1, 2, 3]),
         AxisSpec.categorical([1, 2])],
        data,
    )
    coeffs = np.log(true_hazard_table(grid).values)
    model = PiecewiseLogHazard(grid, coeffs, np.ones(grid.cell_count, dtype=bool))
    stub = BoostFit(
        model=model, n=len(data), iterations=0, initial_risk=0.0,
        steps=np.zeros(0), epsilons=np.zeros(0), risks=np.zeros(0),
        sup_norms=np.zeros(0), importance={0: 1.0, 1: 0.5, 2: 0.25},
        improvement_totals={}, schedule=Schedule(), max_splits=0,
    )
    path = tmp_path / "truth_model.json"
    save_model(stub, path, horizon=1.0)
    return path


def test_simulate_writes_data_and_summary(tmp_path):
    out = tmp_path / "q.csv"
    summ = tmp_path / "s.json"
    rc = run("simulate", "--seed", 1, "--completions", 10, "--out", out,
             "--summary-out", summ)
    assert rc == 0
    ds = ingest_csv(out, 1.0)
    assert len(ds) == 10 and ds.p == 2
    doc = json.loads(summ.read_text())
    assert doc["completions"] == 10 and 0 <= doc["censored_fraction"] <= 1


def test_simulate_same_seed_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("simulate", "--seed", 9, "--completions", 40, "--out", a)
    run("simulate", "--seed", 9, "--completions", 40, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_fit_writes_model_with_log(sim_csv, tmp_path):
    model = tmp_path / "m.json"
    rc = run("fit", "--data", sim_csv, "--time-divisions", 10, "--splits", 2,
             "--iters", 25, "--out", model)
    assert rc == 0
    doc = json.loads(model.read_text())
    assert doc["mode"] == "practical"
    assert len(doc["log"]["risk"]) == doc["iterations"]
    assert doc["importance"]  # axis names mapped to [0, 1]
    assert max(doc["importance"].values()) == 1.0


def test_fit_zero_iterations_is_unit_hazard(sim_csv, tmp_path):
    model = tmp_path / "m0.json"
    run("fit", "--data", sim_csv, "--time-divisions", 5, "--splits", 1,
        "--iters", 0, "--out", model)
    doc = json.loads(model.read_text())
    assert doc["coeffs"] == [] and doc["iterations"] == 0


def test_fit_theory_mode_bounded_by_psi(sim_csv, tmp_path):
    from hazboost import lambert_w

    model = tmp_path / "mt.json"
    rc = run("fit", "--data", sim_csv, "--time-divisions", 8, "--splits", 2,
             "--iters", 120, "--mode", "theory", "--out", model)
    assert rc == 0
    doc = json.loads(model.read_text())
    psi = lambert_w(doc["n"] ** 0.25)
    assert all(s < psi for s in doc["log"]["sup_norm"])


def test_fit_then_eval_reports_training_risk(sim_csv, tmp_path):
    model = tmp_path / "m.json"
    report = tmp_path / "e.json"
    run("fit", "--data", sim_csv, "--time-divisions", 10, "--splits", 2,
        "--iters", 25, "--out", model)
    rc = run("eval", "--model", model, "--data", sim_csv, "--out", report)
    assert rc == 0
    doc = json.loads(model.read_text())
    final = doc["log"]["risk"][-1] if doc["log"]["risk"] else doc["initial_risk"]
    assert json.loads(report.read_text())["risk"] == pytest.approx(final, abs=1e-9)


def test_cv_table_and_chosen(sim_csv, tmp_path):
    table = tmp_path / "cv.csv"
    chosen = tmp_path / "chosen.json"
    rc = run("cv", "--data", sim_csv, "--time-divisions", 6, "--splits-grid", "1,2",
             "--iters-max", 10, "--folds", 3, "--seed", 0, "--out", table,
             "--chosen-out", chosen)
    assert rc == 0
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["max_splits", "m", "mean_heldout_risk"]
    assert len(rows) == 1 + 2 * 11
    doc = json.loads(chosen.read_text())
    assert doc["max_splits"] in (1, 2) and 0 <= doc["m"] <= 10


def test_predict_points(tmp_path):
    # query at cell centers, where the step model equals the rate it encodes
    model = _truth_model(tmp_path, divisions=8)
    pts = tmp_path / "pts.csv"
    pts.write_text("t,x1,x2\n0.4375,1.0,1.0\n0.4375,3.0,2.0\n")
    out = tmp_path / "pred.csv"
    rc = run("predict", "--model", model, "--points", pts, "--out", out)
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert float(rows[0]["hazard"]) == pytest.approx(service_rate(0.4375, 1, 1), abs=1e-12)
    assert float(rows[1]["hazard"]) == pytest.approx(service_rate(0.4375, 3, 2), abs=1e-12)
    assert rows[0]["extrapolated"] == "0"


def test_profile_steps_track_the_rate(tmp_path):
    model = _truth_model(tmp_path)
    out = tmp_path / "prof.csv"
    rc = run("profile", "--model", model, "--vary", "time",
             "--fix", "x1=1,x2=1", "--out", out)
    assert rc == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 8
    for row in rows:
        t = float(row["value"])
        assert float(row["hazard"]) == pytest.approx(service_rate(t, 1, 1), abs=1e-12)
    # piecewise levels decrease in time for this covariate combination
    hazards = [float(r["hazard"]) for r in rows]
    assert all(a > b for a, b in zip(hazards, hazards[1:]))


def test_profile_requires_all_axes_fixed(tmp_path):
    model = _truth_model(tmp_path)
    rc = run("profile", "--model", model, "--vary", "time", "--fix", "x1=1",
             "--out", tmp_path / "p.csv")
    assert rc == 3


def test_importance_listing(tmp_path, capsys):
    model = _truth_model(tmp_path)
    rc = run("importance", "--model", model)
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "axis,importance"
    assert lines[1].startswith("time,1.0")


def test_eval_of_truth_against_itself_is_exact(tmp_path):
    model = _truth_model(tmp_path)
    data_path = tmp_path / "d.csv"
    run("simulate", "--seed", 31, "--completions", 120, "--out", data_path)
    report = tmp_path / "r.json"
    rc = run("eval", "--model", model, "--data", data_path, "--truth", "eq24",
             "--out", report)
    assert rc == 0
    doc = json.loads(report.read_text())
    assert doc["weighted_l1"] == pytest.approx(0.0, abs=1e-12)
    assert doc["weighted_l2"] == pytest.approx(0.0, abs=1e-12)
    assert doc["weighted_mae"] == pytest.approx(0.0, abs=1e-12)


def test_missing_data_file_is_validation_exit(tmp_path):
    rc = run("fit", "--data", tmp_path / "nope.csv", "--out", tmp_path / "m.json")
    assert rc == 3


def test_bad_usage_exits_two():
    with pytest.raises(SystemExit) as exc:
        run("fit")  # --data is required
    assert exc.value.code == 2


def test_numeric_failure_exits_four(tmp_path):
    rc = run("simulate", "--seed", 2, "--completions", 50, "--lambda-max", "1.0",
             "--out", tmp_path / "x.csv")
    assert rc == 4


def test_config_file_defaults_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"completions": 15, "seed": 77}))
    out = tmp_path / "c.csv"
    rc = run("simulate", "--config", cfg, "--out", out)
    assert rc == 0
    assert len(ingest_csv(out, 1.0)) == 15
    # the flag wins over the config value
    rc = run("simulate", "--config", cfg, "--completions", 5, "--out", out)
    assert rc == 0
    assert len(ingest_csv(out, 1.0)) == 5


def test_replications_write_separate_files(tmp_path):
    out = tmp_path / "r.csv"
    rc = run("simulate", "--seed", 3, "--completions", 12, "--replications", 2,
             "--out", out, "--summary-out", tmp_path / "s.json")
    assert rc == 0
    assert (tmp_path / "r_rep0.csv").exists() and (tmp_path / "r_rep1.csv").exists()
    docs = json.loads((tmp_path / "s.json").read_text())
    assert len(docs) == 2 and docs[0]["seed"] == 3 and docs[1]["seed"] == 4

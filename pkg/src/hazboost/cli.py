"""Command-line front end: simulate, fit, cv, predict, profile, importance, eval.

Every command is a pure function of its flags, input files and seed, so
repeated invocations are byte-identical.  Plots are out of scope; commands
emit tidy CSV/JSON for external tooling.

Exit codes: 0 success, 2 usage, 3 data validation, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import boost, crossval, funcdata, hazrisk, simqueue
from .errors import NumericError, ValidationError
from .partition import AxisSpec, accumulate, build_grid

_DEFAULTS = {
    "simulate": {
        "seed": 0,
        "out": "subjects.csv",
        "summary_out": None,
        "completions": 5000,
        "capacity": 3,
        "censor_horizon": 1.0,
        "lambda_max": 2.0,
        "arrival_breaks": "0,12,24",
        "arrival_rates": "0.5,20",
        "type_probs": "0.5,0.5",
        "replications": 1,
        "workers": 1,
    },
    "fit": {
        "horizon": 1.0,
        "time_divisions": 50,
        "time_breaks": None,
        "axis": None,
        "splits": 3,
        "iters": 1000,
        "mode": "practical",
        "out": "model.json",
        "workers": 1,
    },
    "cv": {
        "horizon": 1.0,
        "time_divisions": 50,
        "time_breaks": None,
        "axis": None,
        "splits_grid": "1,2,3,4",
        "iters_max": 200,
        "folds": 5,
        "seed": 0,
        "out": "cv_table.csv",
        "chosen_out": None,
        "workers": 1,
    },
    "predict": {"out": "predictions.csv"},
    "profile": {"fix": "", "out": "profile.csv"},
    "importance": {"out": None},
    "eval": {"horizon": None, "truth": "none", "out": None},
}


def _resolve(args: argparse.Namespace, command: str) -> dict:
    """Merge CLI flags over the optional JSON config over built-in defaults."""
    config = {}
    if getattr(args, "config", None):
        config = json.loads(Path(args.config).read_text())
        if not isinstance(config, dict):
            raise ValidationError("config file must hold a JSON object")
    merged = dict(_DEFAULTS[command])
    for key in merged:
        if key in config:
            merged[key] = config[key]
    for key, value in vars(args).items():
        if key in merged and value is not None:
            merged[key] = value
    return merged


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(","))


def _parse_axis_spec(text: str) -> AxisSpec:
    kind, _, payload = text.partition(":")
    if kind == "midpoints":
        return AxisSpec.midpoints()
    if kind == "uniform":
        return AxisSpec.uniform(int(payload))
    if kind == "categorical":
        return AxisSpec.categorical(_floats(payload) if payload else None)
    if kind == "breakpoints":
        return AxisSpec.breakpoints(_floats(payload))
    raise ValidationError(f"unknown axis spec {text!r}")


def _grid_axes(opts: dict, p: int) -> list[AxisSpec]:
    if opts.get("time_breaks"):
        time_axis = AxisSpec.breakpoints(_floats(opts["time_breaks"]))
    else:
        time_axis = AxisSpec.uniform(int(opts["time_divisions"]))
    cov_specs = opts.get("axis") or []
    if isinstance(cov_specs, str):
        cov_specs = [cov_specs]
    if cov_specs and len(cov_specs) != p:
        raise ValidationError(f"need {p} --axis specs (one per covariate), got {len(cov_specs)}")
    if not cov_specs:
        cov_specs = ["midpoints"] * p
    return [time_axis] + [_parse_axis_spec(s) for s in cov_specs]


def _sim_config(opts: dict, seed: int) -> simqueue.SimConfig:
    return simqueue.SimConfig(
        arrival_breaks=_floats(opts["arrival_breaks"]),
        arrival_rates=_floats(opts["arrival_rates"]),
        capacity=int(opts["capacity"]),
        type_probs=_floats(opts["type_probs"]),
        completions=int(opts["completions"]),
        censor_horizon=float(opts["censor_horizon"]),
        seed=seed,
    )


def _run_replication(payload):
    opts, seed = payload
    config = _sim_config(opts, seed)
    hazard = simqueue.HazardSpec(bound=float(opts["lambda_max"]))
    data, summary = simqueue.simulate(config, hazard)
    return data, summary


def cmd_simulate(args) -> int:
    opts = _resolve(args, "simulate")
    reps = int(opts["replications"])
    workers = int(opts["workers"])
    base_seed = int(opts["seed"])
    jobs = [(opts, base_seed + r) for r in range(reps)]
    if workers > 1 and reps > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_replication, jobs))
    else:
        results = [_run_replication(j) for j in jobs]

    out = Path(opts["out"])
    summaries = []
    for r, (data, summary) in enumerate(results):
        path = out if reps == 1 else out.with_name(f"{out.stem}_rep{r}{out.suffix}")
        funcdata.write_csv(data, path)
        summary = {"seed": base_seed + r, "file": path.name, **summary}
        summaries.append(summary)
        print(
            f"wrote {path}: {summary['completions']} completions, "
            f"censored fraction {summary['censored_fraction']:.4f}"
        )
    if opts["summary_out"]:
        doc = summaries[0] if reps == 1 else summaries
        Path(opts["summary_out"]).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return 0


def cmd_fit(args) -> int:
    opts = _resolve(args, "fit")
    data = funcdata.ingest_csv(args.data, float(opts["horizon"]))
    grid = build_grid(_grid_axes(opts, data.p), data)
    schedule = boost.make_schedule(len(data), str(opts["mode"]))
    result = boost.fit(
        data,
        grid,
        int(opts["splits"]),
        schedule=schedule,
        iters=int(opts["iters"]),
        workers=int(opts["workers"]),
    )
    boost.save_model(result, opts["out"], horizon=float(opts["horizon"]))
    print(
        f"wrote {opts['out']}: {result.iterations} iterations "
        f"(stop: {result.stop_reason}), final training risk {result.final_risk:.6f}"
    )
    return 0


def cmd_cv(args) -> int:
    opts = _resolve(args, "cv")
    data = funcdata.ingest_csv(args.data, float(opts["horizon"]))
    plan = crossval.CVPlan(
        folds=int(opts["folds"]),
        splits_grid=tuple(int(s) for s in str(opts["splits_grid"]).split(",")),
        iters_max=int(opts["iters_max"]),
        seed=int(opts["seed"]),
    )
    result = crossval.cross_validate(
        data, _grid_axes(opts, data.p), plan, workers=int(opts["workers"])
    )
    result.write_csv(opts["out"])
    chosen = {
        "max_splits": result.best_splits,
        "m": result.best_m,
        "mean_heldout_risk": result.best_risk,
    }
    if opts["chosen_out"]:
        Path(opts["chosen_out"]).write_text(json.dumps(chosen, sort_keys=True) + "\n")
    print(
        f"wrote {opts['out']}; chosen max_splits={result.best_splits} "
        f"m={result.best_m} (mean held-out risk {result.best_risk:.6f})"
    )
    return 0


def cmd_predict(args) -> int:
    opts = _resolve(args, "predict")
    loaded = boost.load_model(args.model)
    p = loaded.model.grid.n_axes - 1
    with Path(args.points).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["t"] + [f"x{i}" for i in range(1, p + 1)]
        if header != expected:
            raise ValidationError(f"points header must be {','.join(expected)}")
        rows = [[float(v) for v in row] for row in reader if row]
    with Path(opts["out"]).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(expected + ["hazard", "extrapolated"])
        for row in rows:
            hazard, flag = boost.predict(loaded.model, row[0], tuple(row[1:]))
            writer.writerow([repr(v) for v in row] + [repr(hazard), int(flag)])
    print(f"wrote {opts['out']}: {len(rows)} predictions")
    return 0


def _axis_index(name: str, n_axes: int) -> int:
    if name == "time":
        return 0
    if name.startswith("x") and name[1:].isdigit():
        idx = int(name[1:])
        if 1 <= idx < n_axes:
            return idx
    raise ValidationError(f"unknown axis {name!r}")


def cmd_profile(args) -> int:
    opts = _resolve(args, "profile")
    loaded = boost.load_model(args.model)
    grid = loaded.model.grid
    vary = _axis_index(args.vary, grid.n_axes)
    fixed: dict[int, float] = {}
    if opts["fix"]:
        for item in str(opts["fix"]).split(","):
            name, _, value = item.partition("=")
            key = "time" if name.strip() in ("t", "time") else name.strip()
            fixed[_axis_index(key, grid.n_axes)] = float(value)
    missing = [a for a in range(grid.n_axes) if a != vary and a not in fixed]
    if missing:
        names = ", ".join("time" if a == 0 else f"x{a}" for a in missing)
        raise ValidationError(f"--fix must pin every other axis; missing {names}")

    axis = grid.axes[vary]
    interval = axis.kind == "interval"
    with Path(opts["out"]).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value", "lo", "hi", "hazard", "extrapolated"])
        for k, center in enumerate(axis.centers):
            coords = [0.0] * grid.n_axes
            coords[vary] = float(center)
            for a, v in fixed.items():
                coords[a] = v
            hazard, flag = boost.predict(loaded.model, coords[0], tuple(coords[1:]))
            lo = repr(float(axis.edges[k])) if interval else ""
            hi = repr(float(axis.edges[k + 1])) if interval else ""
            writer.writerow([repr(float(center)), lo, hi, repr(hazard), int(flag)])
    print(f"wrote {opts['out']}: {axis.n_cells} cells along {args.vary}")
    return 0


def cmd_importance(args) -> int:
    opts = _resolve(args, "importance")
    loaded = boost.load_model(args.model)
    items = sorted(loaded.importance.items(), key=lambda kv: (-kv[1], kv[0]))
    lines = [f"{name},{repr(float(v))}" for name, v in items]
    if opts["out"]:
        Path(opts["out"]).write_text("axis,importance\n" + "\n".join(lines) + "\n")
        print(f"wrote {opts['out']}")
    else:
        print("axis,importance")
        for line in lines:
            print(line)
    return 0


def cmd_eval(args) -> int:
    opts = _resolve(args, "eval")
    loaded = boost.load_model(args.model)
    horizon = float(opts["horizon"]) if opts["horizon"] is not None else loaded.horizon
    data = funcdata.ingest_csv(args.data, horizon)
    if data.p != loaded.model.grid.n_axes - 1:
        raise ValidationError(
            f"model expects {loaded.model.grid.n_axes - 1} covariates, data has {data.p}"
        )
    report = {"risk": hazrisk.risk_on_subjects(loaded.model, data)}
    truth = str(opts["truth"])
    if truth not in ("none", "sim", "eq24"):
        raise ValidationError(f"unknown truth {truth!r}")
    if truth != "none":
        if loaded.model.grid.n_axes != 3:
            raise ValidationError("the built-in truth needs axes (time, x1, x2)")
        stats = accumulate(loaded.model.grid, data)
        true_cf = simqueue.true_hazard_table(loaded.model.grid, horizon=horizon)
        fitted = np.exp(loaded.model.coeffs)
        diff = hazrisk.CellFunction(loaded.model.grid, fitted - true_cf.values)
        l1, l2, _ = hazrisk.norms(diff, stats)
        total = stats.total_mass
        report.update(
            weighted_l1=l1,
            weighted_l2=l2,
            weighted_mae=l1 / total,
            weighted_rmse=l2 / total**0.5,
            total_mass=total,
        )
    text = json.dumps(report, sort_keys=True, indent=1)
    if opts["out"]:
        Path(opts["out"]).write_text(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hazboost",
        description="Boosted nonparametric hazard estimation with time-dependent covariates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        cmd = sub.add_parser(name, help=help_text)
        cmd.set_defaults(func=handler)
        cmd.add_argument("--config", help="JSON file of flag defaults (flags win)")
        return cmd

    s = add("simulate", cmd_simulate, "simulate the state-dependent service queue")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--summary-out", dest="summary_out")
    s.add_argument("--completions", type=int)
    s.add_argument("--capacity", type=int)
    s.add_argument("--censor-horizon", dest="censor_horizon", type=float)
    s.add_argument("--lambda-max", dest="lambda_max", type=float)
    s.add_argument("--arrival-breaks", dest="arrival_breaks")
    s.add_argument("--arrival-rates", dest="arrival_rates")
    s.add_argument("--type-probs", dest="type_probs")
    s.add_argument("--replications", type=int)
    s.add_argument("--workers", type=int)

    f = add("fit", cmd_fit, "fit the boosted hazard model")
    f.add_argument("--data", required=True)
    f.add_argument("--horizon", type=float)
    f.add_argument("--time-divisions", dest="time_divisions", type=int)
    f.add_argument("--time-breaks", dest="time_breaks")
    f.add_argument("--axis", action="append")
    f.add_argument("--splits", type=int)
    f.add_argument("--iters", type=int)
    f.add_argument("--mode", choices=["practical", "theory"])
    f.add_argument("--out")
    f.add_argument("--workers", type=int)

    c = add("cv", cmd_cv, "choose tree splits and iteration count by cross validation")
    c.add_argument("--data", required=True)
    c.add_argument("--horizon", type=float)
    c.add_argument("--time-divisions", dest="time_divisions", type=int)
    c.add_argument("--time-breaks", dest="time_breaks")
    c.add_argument("--axis", action="append")
    c.add_argument("--splits-grid", dest="splits_grid")
    c.add_argument("--iters-max", dest="iters_max", type=int)
    c.add_argument("--folds", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.add_argument("--chosen-out", dest="chosen_out")
    c.add_argument("--workers", type=int)

    p = add("predict", cmd_predict, "hazard at given (t, x) points")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--out")

    pr = add("profile", cmd_profile, "hazard profile along one axis, others fixed")
    pr.add_argument("--model", required=True)
    pr.add_argument("--vary", required=True)
    pr.add_argument("--fix")
    pr.add_argument("--out")

    im = add("importance", cmd_importance, "per-axis split-improvement importances")
    im.add_argument("--model", required=True)
    im.add_argument("--out")

    ev = add("eval", cmd_eval, "held-out risk and optional error vs the built-in truth")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--horizon", type=float)
    ev.add_argument("--truth", choices=["none", "sim", "eq24"])
    ev.add_argument("--out")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

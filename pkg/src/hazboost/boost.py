"""Functional gradient descent for the hazard likelihood with tree directions.

Each iteration fits a shallow tree to the negative risk gradient, normalizes
it to a unit descent direction, and steps the piecewise-constant log-hazard
along it.  Two step regimes are supported:

* ``practical``: exact line search for the step inside (0, 1/(m+1)], with
  unit shrinkage.  Training risk is non-increasing by construction.
* ``theory``: fixed steps nu/(m+1) with the shrinkage chosen so that
  nu^2 exp(psi) = log(n) / (64 n^(1/4)), and early stopping once the sup
  norm of the candidate estimate would reach psi = W(n^(1/4)).  A rejected
  candidate is discarded, not clipped.

The model accumulates coefficients cell-wise rather than storing the tree
ensemble; every tree is constant on grid cells, so the running sum is itself
a cell function.  Trees are logged only through their split improvements,
which feed the per-axis importance report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericError, ValidationError
from .funcdata import Dataset
from .hazrisk import CellFunction, PiecewiseLogHazard, alignment, norms, risk
from .partition import Grid, GridStats, accumulate
from .treelearn import ZeroNormTree, fit_tree, normalize, split_improvements

GRADIENT_TOL = 1e-10


def lambert_w(y: float) -> float:
    """Real root w of w * exp(w) = y for y > 0.

    Newton from an upper bound (log y for y >= e, min(1, y) below) converges
    monotonically because w exp(w) - y is convex and increasing on w >= 0.
    """
    if y <= 0.0:
        raise ValidationError("lambert_w requires y > 0")
    w = math.log(y) if y >= math.e else min(1.0, y)
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - y
        if abs(f) <= 1e-13 * max(1.0, y):
            break
        w -= f / (ew * (1.0 + w))
    return w


@dataclass(frozen=True)
class Schedule:
    """Step-size policy.  ``psi`` is the sup-norm stopping budget (theory
    mode only); ``nu`` the shrinkage factor."""

    mode: str = "practical"
    nu: float = 1.0
    psi: float | None = None
    max_iters: int = 1000
    line_search_tol: float = 1e-6


def make_schedule(
    n: int,
    mode: str = "practical",
    max_iters: int | None = None,
    line_search_tol: float = 1e-6,
) -> Schedule:
    """Build a step schedule for a sample of size n."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if mode == "practical":
        return Schedule("practical", 1.0, None, max_iters or 1000, line_search_tol)
    if mode == "theory":
        psi = lambert_w(n**0.25)
        # exp(psi) = n^(1/4) / psi, so the shrinkage identity
        # nu^2 exp(psi) = log(n) / (64 n^(1/4)) gives the closed form below.
        nu = math.sqrt(psi * math.log(n) / (64.0 * math.sqrt(n)))
        return Schedule("theory", nu, psi, max_iters or 1000, line_search_tol)
    raise ValidationError(f"unknown schedule mode {mode!r}")


def line_search(
    model: PiecewiseLogHazard,
    direction: CellFunction,
    m: int,
    stats: GridStats,
    tol: float = 1e-6,
) -> float:
    """Step s in (0, 1/(m+1)] minimizing the risk of F - s * direction.

    The risk along the ray is strictly convex in s, so plain ternary search
    converges; it stops once the bracket is narrower than tol/(m+1).  When
    the minimizer sits at the right endpoint the cap itself is returned.
    """
    occ = stats.occupied
    a = np.exp(model.coeffs[occ]) * stats.mass[occ]
    d = direction.values[occ]
    db = float(np.sum(d * stats.failures[occ])) / stats.n

    def phi(s):
        return float(np.sum(a * np.exp(-s * d))) + s * db

    cap = 1.0 / (m + 1)
    lo, hi = 0.0, cap
    while hi - lo > tol * cap:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if phi(m1) < phi(m2):
            hi = m2
        else:
            lo = m1
    mid = 0.5 * (lo + hi)
    return cap if phi(cap) <= phi(mid) else mid


@dataclass
class BoostFit:
    """A fitted model plus the per-iteration descent log."""

    model: PiecewiseLogHazard
    n: int
    iterations: int
    initial_risk: float
    steps: np.ndarray
    epsilons: np.ndarray
    risks: np.ndarray
    sup_norms: np.ndarray
    importance: dict[int, float]
    improvement_totals: dict[int, float]
    schedule: Schedule
    max_splits: int
    stop_reason: str = "max_iters"

    @property
    def final_risk(self) -> float:
        return float(self.risks[-1]) if self.iterations else self.initial_risk


def importance(fit: BoostFit) -> dict[int, float]:
    """Per-axis split improvements scaled so the largest value is 1."""
    totals = fit.improvement_totals
    n_axes = fit.model.grid.n_axes
    peak = max(totals.values(), default=0.0)
    if peak <= 0.0:
        return {a: 0.0 for a in range(n_axes)}
    return {a: totals.get(a, 0.0) / peak for a in range(n_axes)}


def fit(
    data: Dataset,
    grid: Grid,
    max_splits: int,
    schedule: Schedule | None = None,
    iters: int | None = None,
    workers: int = 1,
    iteration_callback=None,
) -> BoostFit:
    """Run the descent loop and return the fitted hazard model.

    ``iteration_callback(m, coeffs)`` is invoked after iteration m is
    accepted; cross validation uses it to score held-out risk along the path.
    """
    schedule = schedule or Schedule()
    iters = schedule.max_iters if iters is None else iters
    stats = accumulate(grid, data)
    if stats.total_failures == 0:
        raise ValidationError(
            "no failures in the data; the saturated hazard is identically zero"
        )
    theory = schedule.mode == "theory"
    occ = stats.occupied
    d_occ = stats.failures[occ] / stats.n
    mass_occ = stats.mass[occ]

    coeffs = np.zeros(grid.cell_count)
    model = PiecewiseLogHazard(grid, coeffs, occ)
    cur_risk = risk(model, stats)
    initial_risk = cur_risk

    steps, epsilons, risks, sups = [], [], [], []
    totals: dict[int, float] = {}
    stop = "max_iters"

    for m in range(iters):
        g_occ = np.exp(coeffs[occ]) - d_occ / mass_occ
        gnorm = math.sqrt(float(np.sum(g_occ * g_occ * mass_occ)))
        if gnorm < GRADIENT_TOL:
            stop = "gradient"
            break
        g_vals = np.zeros(grid.cell_count)
        g_vals[occ] = g_occ
        grad = CellFunction(grid, g_vals)

        tree = fit_tree(CellFunction(grid, -g_vals), stats, max_splits, workers)
        try:
            unit = normalize(tree, stats)
        except ZeroNormTree:
            stop = "zero_tree"
            break
        # unit approximates the negative normalized gradient; flipping it
        # gives the ascent-aligned direction whose alignment is the achieved
        # epsilon, and the update subtracts that direction.
        eps_dir = CellFunction(grid, -unit.values)
        eps = alignment(grad, eps_dir, stats)

        if theory:
            step = schedule.nu / (m + 1)
        else:
            step = line_search(model, eps_dir, m, stats, schedule.line_search_tol)

        candidate = coeffs - step * eps_dir.values
        sup = float(np.max(np.abs(candidate)))
        if theory and sup >= schedule.psi:
            stop = "sup_norm"
            break
        new_risk = risk(PiecewiseLogHazard(grid, candidate), stats)
        if theory:
            # One-step risk decrease promised by the curvature bound while
            # the iterates stay inside the sup-norm budget.
            bound = eps * schedule.nu / (m + 1) * gnorm - (
                schedule.nu**2 * math.exp(schedule.psi) / (2.0 * (m + 1) ** 2)
            )
            if cur_risk - new_risk <= bound - 1e-9:
                raise NumericError(
                    f"iteration {m}: risk decrease {cur_risk - new_risk} "
                    f"violates the descent bound {bound}"
                )
        elif new_risk > cur_risk:
            stop = "no_progress"
            break

        coeffs[:] = candidate
        cur_risk = new_risk
        steps.append(step)
        epsilons.append(eps)
        risks.append(new_risk)
        sups.append(sup)
        for a, v in split_improvements(tree).items():
            totals[a] = totals.get(a, 0.0) + v
        if iteration_callback is not None:
            iteration_callback(m + 1, coeffs)

    out = BoostFit(
        model=model,
        n=stats.n,
        iterations=len(steps),
        initial_risk=initial_risk,
        steps=np.asarray(steps),
        epsilons=np.asarray(epsilons),
        risks=np.asarray(risks),
        sup_norms=np.asarray(sups),
        importance={},
        improvement_totals=totals,
        schedule=schedule,
        max_splits=max_splits,
        stop_reason=stop,
    )
    out.importance = importance(out)
    return out


def predict(model: PiecewiseLogHazard, t: float, x=()) -> tuple[float, bool]:
    """Hazard at (t, x) and whether the containing cell is an extrapolation
    (zero occupation mass during training, coefficient frozen at 0)."""
    j = model.grid.locate(t, x)
    flag = model.trained_mask is not None and not bool(model.trained_mask[j])
    return math.exp(float(model.coeffs[j])), flag


def _axis_name(a: int) -> str:
    return "time" if a == 0 else f"x{a}"


def save_model(fit_result: BoostFit, path: str | Path, horizon: float = 1.0) -> None:
    """Serialize a fitted model (grid, sparse coefficients, descent log)."""
    model = fit_result.model
    occ = model.trained_mask
    flags = np.flatnonzero(~occ).tolist() if occ is not None else []
    nonzero = np.flatnonzero(model.coeffs != 0.0)
    doc = {
        "grid": model.grid.to_dict(),
        "coeffs": [[int(j), float(model.coeffs[j])] for j in nonzero],
        "n": fit_result.n,
        "iterations": fit_result.iterations,
        "importance": {
            _axis_name(a): v for a, v in sorted(fit_result.importance.items())
        },
        "mode": fit_result.schedule.mode,
        "flags": flags,
        "horizon": horizon,
        "max_splits": fit_result.max_splits,
        "initial_risk": fit_result.initial_risk,
        "stop_reason": fit_result.stop_reason,
        "log": {
            "step": fit_result.steps.tolist(),
            "epsilon": fit_result.epsilons.tolist(),
            "risk": fit_result.risks.tolist(),
            "sup_norm": fit_result.sup_norms.tolist(),
        },
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


@dataclass
class LoadedModel:
    model: PiecewiseLogHazard
    n: int
    iterations: int
    importance: dict[str, float]
    mode: str
    horizon: float
    log: dict
    meta: dict = field(default_factory=dict)


def load_model(path: str | Path) -> LoadedModel:
    doc = json.loads(Path(path).read_text())
    grid = Grid.from_dict(doc["grid"])
    coeffs = np.zeros(grid.cell_count)
    for j, c in doc["coeffs"]:
        coeffs[int(j)] = float(c)
    mask = np.ones(grid.cell_count, dtype=bool)
    mask[np.asarray(doc.get("flags", []), dtype=int)] = False
    return LoadedModel(
        model=PiecewiseLogHazard(grid, coeffs, mask),
        n=int(doc["n"]),
        iterations=int(doc["iterations"]),
        importance=doc.get("importance", {}),
        mode=doc.get("mode", "practical"),
        horizon=float(doc.get("horizon", 1.0)),
        log=doc.get("log", {}),
        meta={k: doc[k] for k in ("initial_risk", "stop_reason", "max_splits") if k in doc},
    )

"""Joint selection of tree splits and iteration count by k-fold cross validation.

Subjects (never their segments) are the cross-validation unit: segments of
one subject are dependent, so splitting them across folds would leak.  For
each fold and splits candidate a single boosting path is fit up to the
iteration cap, and held-out risk is recorded after every iteration; this
gives the whole (splits, m) table from k * len(splits_grid) fits.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import boost
from .errors import ValidationError
from .funcdata import Dataset
from .partition import AxisSpec, Grid, accumulate, build_grid


@dataclass(frozen=True)
class CVPlan:
    folds: int = 5
    splits_grid: tuple[int, ...] = (1, 2, 3, 4)
    iters_max: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValidationError("need at least 2 folds")
        if not self.splits_grid:
            raise ValidationError("splits_grid must be nonempty")
        if self.iters_max < 0:
            raise ValidationError("iters_max must be >= 0")


@dataclass
class CVResult:
    splits_grid: tuple[int, ...]
    iters_max: int
    folds: int
    seed: int
    mean_risk: np.ndarray  # shape (len(splits_grid), iters_max + 1)
    best_splits: int
    best_m: int
    best_risk: float

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["max_splits", "m", "mean_heldout_risk"])
            for i, s in enumerate(self.splits_grid):
                for m in range(self.iters_max + 1):
                    writer.writerow([s, m, repr(float(self.mean_risk[i, m]))])


def _heldout_path(train: Dataset, grid: Grid, splits: int, iters_max: int,
                  ho_mass: np.ndarray, ho_fail: np.ndarray, ho_n: int) -> np.ndarray:
    """Held-out risk after each of 0..iters_max boosting iterations."""
    path = np.empty(iters_max + 1)
    path[0] = ho_mass.sum()  # risk of the zero model is the mean at-risk time

    def score(m, coeffs):
        path[m] = float(
            np.sum(np.exp(coeffs) * ho_mass) - np.sum(coeffs * ho_fail) / ho_n
        )

    result = boost.fit(
        train, grid, splits, iters=iters_max, iteration_callback=score
    )
    # a path that stopped early stays at its final model from there on
    path[result.iterations + 1 :] = path[result.iterations]
    return path


def _run_job(payload):
    fold, splits, train, grid, ho_mass, ho_fail, ho_n, iters_max = payload
    return fold, splits, _heldout_path(train, grid, splits, iters_max, ho_mass, ho_fail, ho_n)


def cross_validate(
    data: Dataset, grid_axes: list[AxisSpec], plan: CVPlan, workers: int = 1
) -> CVResult:
    """Mean held-out risk over folds for every (max_splits, m) pair.

    The binning grid is resolved once against the full dataset so every fold
    scores on identical cells; only masses, counts and coefficients are
    re-estimated per fold.  Fold membership comes from a seeded shuffle of
    the subjects sorted by id, so the result does not depend on input order.
    """
    n = len(data.subjects)
    if plan.folds > n:
        raise ValidationError(f"folds ({plan.folds}) cannot exceed subjects ({n})")
    grid = build_grid(grid_axes, data)

    by_id = sorted(data.subjects, key=lambda s: s.id)
    perm = np.random.default_rng(plan.seed).permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[perm] = np.arange(n) % plan.folds

    jobs = []
    for fold in range(plan.folds):
        train_subj = tuple(s for i, s in enumerate(by_id) if fold_of[i] != fold)
        ho_subj = tuple(s for i, s in enumerate(by_id) if fold_of[i] == fold)
        train = Dataset(train_subj, data.p, data.horizon)
        heldout = Dataset(ho_subj, data.p, data.horizon)
        if sum(1 for s in train_subj if s.event) == 0:
            raise ValidationError(
                f"fold {fold}: training part has no failures; use fewer folds"
            )
        ho_stats = accumulate(grid, heldout)
        for splits in plan.splits_grid:
            jobs.append(
                (fold, splits, train, grid, ho_stats.mass, ho_stats.failures,
                 ho_stats.n, plan.iters_max)
            )

    table = np.zeros((len(plan.splits_grid), plan.iters_max + 1))
    col = {s: i for i, s in enumerate(plan.splits_grid)}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    results.sort(key=lambda r: (r[1], r[0]))  # fixed merge order: splits, then fold
    for _, splits, path in results:
        table[col[splits]] += path
    table /= plan.folds

    # scan in ascending splits then m so exact ties resolve to the smaller pair
    order = sorted(range(len(plan.splits_grid)), key=lambda i: plan.splits_grid[i])
    best = (order[0], 0)
    for i in order:
        for m in range(plan.iters_max + 1):
            if table[i, m] < table[best]:
                best = (i, m)
    return CVResult(
        splits_grid=tuple(plan.splits_grid),
        iters_max=plan.iters_max,
        folds=plan.folds,
        seed=plan.seed,
        mean_risk=table,
        best_splits=plan.splits_grid[best[0]],
        best_m=best[1],
        best_risk=float(table[best]),
    )

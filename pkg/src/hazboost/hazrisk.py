"""Likelihood risk, cell MLE, gradient, and inner-product geometry on a grid.

The estimation target is a piecewise-constant log-hazard F over the grid
cells.  The negative mean log-likelihood ("the risk") of F is

    mean over subjects of  integral of Y(t) exp(F(t, X(t))) dt
                           minus the event indicator times F(T, X(T)),

which, because F is constant on cells, collapses to the exact cell sum
``sum_j exp(c_j) mass_j - c_j D_j / n`` over occupied cells.  The L2
gradient with respect to the occupation measure is ``exp(c_j) - lambda_j``
where ``lambda_j = D_j / (n mass_j)`` is the saturated per-cell hazard MLE.
Cells with zero mass carry no information; their coefficients are frozen at
zero, which makes predictions there finite and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ValidationError
from .funcdata import Dataset
from .partition import Grid, GridStats


@dataclass
class CellFunction:
    """A real value per grid cell; values on zero-mass cells are stored as 0."""

    grid: Grid
    values: np.ndarray


@dataclass
class PiecewiseLogHazard:
    """Log-hazard model F(t, x) = sum_j c_j 1{(t, x) in cell j}.

    ``trained_mask`` marks cells that carried mass during fitting; predictions
    on unmarked cells are extrapolations (coefficient frozen at 0, hazard 1).
    """

    grid: Grid
    coeffs: np.ndarray
    trained_mask: np.ndarray | None = None

    @staticmethod
    def zero(grid: Grid) -> "PiecewiseLogHazard":
        return PiecewiseLogHazard(grid, np.zeros(grid.cell_count))

    def log_hazard(self, t: float, x=()) -> float:
        return float(self.coeffs[self.grid.locate(t, x)])

    def hazard(self, t: float, x=()) -> float:
        return math.exp(self.log_hazard(t, x))


def mle_hazard(stats: GridStats) -> CellFunction:
    """Saturated per-cell hazard, D_j / (n mass_j); zero on empty cells."""
    values = np.zeros(len(stats))
    occ = stats.occupied
    values[occ] = stats.failures[occ] / (stats.n * stats.mass[occ])
    return CellFunction(stats.grid, values)


def risk(model: PiecewiseLogHazard, stats: GridStats) -> float:
    """Training risk in cell form, summed in cell-index order."""
    occ = stats.occupied
    c = model.coeffs[occ]
    return float(
        np.sum(np.exp(c) * stats.mass[occ]) - np.sum(c * stats.failures[occ]) / stats.n
    )


def gradient(model: PiecewiseLogHazard, stats: GridStats) -> CellFunction:
    """Risk gradient exp(c_j) - D_j/(n mass_j) on occupied cells, 0 elsewhere."""
    values = np.zeros(len(stats))
    occ = stats.occupied
    values[occ] = np.exp(model.coeffs[occ]) - stats.failures[occ] / (
        stats.n * stats.mass[occ]
    )
    return CellFunction(stats.grid, values)


class Norms(NamedTuple):
    l1: float
    l2: float
    sup: float


def norms(f: CellFunction, stats: GridStats) -> Norms:
    """Occupation-measure L1 and L2 norms plus the sup norm over all cells."""
    v = f.values
    l1 = float(np.sum(np.abs(v) * stats.mass))
    l2 = float(np.sqrt(np.sum(v * v * stats.mass)))
    sup = float(np.max(np.abs(v))) if v.size else 0.0
    return Norms(l1, l2, sup)


def alignment(g: CellFunction, direction: CellFunction, stats: GridStats) -> float:
    """Inner product of the normalized gradient with a unit direction.

    This is the alignment the descent direction achieved this iteration; it
    lies in [-1, 1] when ``direction`` has unit L2 norm.
    """
    gnorm = norms(g, stats).l2
    if gnorm == 0.0:
        raise ValidationError("gradient is zero; descent has converged")
    return float(np.sum(g.values * direction.values * stats.mass) / gnorm)


def likelihood_risk(
    data: Dataset,
    log_hazard: Callable[[float, tuple], float],
    time_breaks=(),
) -> float:
    """Directly evaluate the negative mean log-likelihood of ``log_hazard``.

    The callable is treated as constant in t between consecutive entries of
    ``time_breaks`` (within each covariate-constant segment), so the exposure
    integral is exact for step functions; it is evaluated at piece midpoints.
    The event term evaluates the callable at the event time itself, which is
    where boundary conventions of the function matter.
    """
    n = len(data.subjects)
    if n == 0:
        raise ValidationError("cannot evaluate the risk of an empty dataset")
    breaks = sorted(float(b) for b in time_breaks)
    total = 0.0
    for subj in data.subjects:
        acc = 0.0
        for seg in subj.segments:
            cuts = [seg.t_start]
            cuts.extend(b for b in breaks if seg.t_start < b < seg.t_end)
            cuts.append(seg.t_end)
            for a, b in zip(cuts, cuts[1:]):
                acc += (b - a) * math.exp(log_hazard(0.5 * (a + b), seg.x))
        if subj.event:
            acc -= log_hazard(subj.event_time, subj.segments[-1].x)
        total += acc
    return total / n


def risk_on_subjects(model: PiecewiseLogHazard, data: Dataset) -> float:
    """Risk of the model evaluated directly on subjects (exact closed form).

    Used for held-out scoring; cells the data occupies but the model never
    saw contribute exp(0) times their overlap because frozen coefficients
    are zero.
    """

    def fn(t, x):
        return float(model.coeffs[model.grid.locate(t, x)])

    return likelihood_risk(data, fn, model.grid.time_edges[1:-1])

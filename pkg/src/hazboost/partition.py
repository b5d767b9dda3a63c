"""Histogram partition of the time-covariate domain and exact occupation measures.

The domain [0, 1] x X is tiled by axis-aligned cells, left-open right-closed
per axis except that each axis's first interval is closed at its left edge so
the tiling covers the whole domain.  ``accumulate`` integrates every subject's
at-risk indicator over each cell in closed form (piecewise-constant covariate
paths make the integral a sum of interval overlaps) and counts observed
failures per cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import ValidationError
from .funcdata import Dataset


@dataclass(frozen=True)
class AxisSpec:
    """Declarative axis description, resolved against data by ``build_grid``.

    Kinds:
      * ``breakpoints`` : explicit full edge list (first and last included)
      * ``uniform``     : equal division of [0, 1] for time, or of the
                          observed value range for a covariate
      * ``categorical`` : one cell per level; levels taken from the data
                          when not given
      * ``midpoints``   : data-driven boundaries at midpoints of consecutive
                          distinct observed values, outer cells unbounded
    """

    kind: str
    edges: tuple[float, ...] | None = None
    count: int | None = None
    levels: tuple[float, ...] | None = None

    @staticmethod
    def breakpoints(edges) -> "AxisSpec":
        edges = tuple(float(e) for e in edges)
        if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
            raise ValidationError("breakpoints must be strictly increasing, length >= 2")
        return AxisSpec("breakpoints", edges=edges)

    @staticmethod
    def uniform(count: int) -> "AxisSpec":
        if count < 1:
            raise ValidationError("uniform count must be >= 1")
        return AxisSpec("uniform", count=int(count))

    @staticmethod
    def categorical(levels=None) -> "AxisSpec":
        if levels is not None:
            levels = tuple(float(v) for v in levels)
            if len(set(levels)) != len(levels):
                raise ValidationError("categorical levels must be distinct")
        return AxisSpec("categorical", levels=levels)

    @staticmethod
    def midpoints() -> "AxisSpec":
        return AxisSpec("midpoints")


class IntervalAxis:
    """Cells (e_k, e_{k+1}] from a finite edge list; first cell closed at e_0."""

    kind = "interval"

    def __init__(self, edges):
        self.edges = np.asarray(edges, dtype=np.float64)

    @property
    def n_cells(self) -> int:
        return len(self.edges) - 1

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def split_points(self) -> np.ndarray:
        return self.edges[1:-1]

    def locate(self, v: float) -> int:
        j = int(np.searchsorted(self.edges, v, side="left")) - 1
        if j == -1 and v == self.edges[0]:
            return 0
        if j < 0 or j >= self.n_cells:
            raise ValidationError(f"value {v} outside axis range [{self.edges[0]}, {self.edges[-1]}]")
        return j

    def to_dict(self) -> dict:
        return {"kind": "interval", "edges": self.edges.tolist()}


class CategoricalAxis:
    """One cell per level.  Split thresholds sit midway between sorted levels."""

    kind = "categorical"

    def __init__(self, levels):
        self.levels = np.sort(np.asarray(levels, dtype=np.float64))
        self._index = {v: i for i, v in enumerate(self.levels)}

    @property
    def n_cells(self) -> int:
        return len(self.levels)

    @property
    def centers(self) -> np.ndarray:
        return self.levels

    @property
    def split_points(self) -> np.ndarray:
        return 0.5 * (self.levels[:-1] + self.levels[1:])

    def locate(self, v: float) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise ValidationError(f"value {v} is not a level of the categorical axis") from None

    def to_dict(self) -> dict:
        return {"kind": "categorical", "levels": self.levels.tolist()}


class MidpointAxis:
    """Cells around distinct observed values, bounded by their midpoints.

    The outer cells extend to infinity, so every real value locates; the
    observed values themselves serve as cell centers.
    """

    kind = "midpoints"

    def __init__(self, values):
        self.values = np.sort(np.asarray(values, dtype=np.float64))
        self.boundaries = 0.5 * (self.values[:-1] + self.values[1:])

    @property
    def n_cells(self) -> int:
        return len(self.values)

    @property
    def centers(self) -> np.ndarray:
        return self.values

    @property
    def split_points(self) -> np.ndarray:
        return self.boundaries

    def locate(self, v: float) -> int:
        return int(np.searchsorted(self.boundaries, v, side="left"))

    def to_dict(self) -> dict:
        return {"kind": "midpoints", "centers": self.values.tolist()}


def _axis_from_dict(d: dict):
    kind = d["kind"]
    if kind == "interval":
        return IntervalAxis(d["edges"])
    if kind == "categorical":
        return CategoricalAxis(d["levels"])
    if kind == "midpoints":
        return MidpointAxis(d["centers"])
    raise ValidationError(f"unknown axis kind {kind!r}")


@dataclass(frozen=True)
class Grid:
    """Axis-aligned tiling of [0, 1] x X, time axis first (dimension 0)."""

    axes: tuple

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.n_cells for ax in self.axes)

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_axes(self) -> int:
        return len(self.axes)

    @property
    def time_edges(self) -> np.ndarray:
        return self.axes[0].edges

    def index(self, multi) -> int:
        """Row-major flat index of a multi-index (time coordinate first)."""
        j = 0
        for k, m in zip(self.shape, multi):
            j = j * k + m
        return j

    def multi(self, j: int) -> tuple[int, ...]:
        out = []
        for k in reversed(self.shape):
            out.append(j % k)
            j //= k
        return tuple(reversed(out))

    def locate(self, t: float, x=()) -> int:
        """Flat index of the unique cell containing (t, x)."""
        if len(x) != self.n_axes - 1:
            raise ValidationError(f"expected {self.n_axes - 1} covariates, got {len(x)}")
        multi = [self.axes[0].locate(t)]
        for ax, v in zip(self.axes[1:], x):
            multi.append(ax.locate(v))
        return self.index(multi)

    @cached_property
    def centers(self) -> np.ndarray:
        """Cell center coordinates, shape (cell_count, n_axes)."""
        grids = np.meshgrid(*[ax.centers for ax in self.axes], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def to_dict(self) -> dict:
        return {"axes": [ax.to_dict() for ax in self.axes]}

    @staticmethod
    def from_dict(d: dict) -> "Grid":
        return Grid(tuple(_axis_from_dict(a) for a in d["axes"]))


def _observed_values(data: Dataset, cov_index: int) -> np.ndarray:
    vals = {seg.x[cov_index] for subj in data.subjects for seg in subj.segments}
    return np.sort(np.asarray(sorted(vals), dtype=np.float64))


def _resolve_axis(spec: AxisSpec, axis_index: int, data: Dataset):
    name = "time" if axis_index == 0 else f"x{axis_index}"
    if axis_index == 0:
        if spec.kind == "uniform":
            return IntervalAxis(np.linspace(0.0, 1.0, spec.count + 1))
        if spec.kind == "breakpoints":
            edges = np.asarray(spec.edges)
            if edges[0] != 0.0 or edges[-1] != 1.0:
                raise ValidationError("time axis breakpoints must start at 0 and end at 1")
            return IntervalAxis(edges)
        raise ValidationError(f"axis {name}: kind {spec.kind!r} not valid for the time axis")

    if spec.kind == "breakpoints":
        return IntervalAxis(np.asarray(spec.edges))
    if spec.kind == "uniform":
        vals = _observed_values(data, axis_index - 1)
        if vals.size == 0 or vals[0] == vals[-1]:
            raise ValidationError(f"axis {name}: no usable value range for a uniform split")
        return IntervalAxis(np.linspace(vals[0], vals[-1], spec.count + 1))
    if spec.kind == "categorical":
        levels = spec.levels
        if levels is None:
            vals = _observed_values(data, axis_index - 1)
            if vals.size == 0:
                raise ValidationError(f"axis {name}: no observed levels to derive")
            levels = vals
        return CategoricalAxis(levels)
    if spec.kind == "midpoints":
        vals = _observed_values(data, axis_index - 1)
        if vals.size == 0:
            raise ValidationError(f"axis {name}: no observed values to derive boundaries")
        return MidpointAxis(vals)
    raise ValidationError(f"axis {name}: unknown kind {spec.kind!r}")


def build_grid(axes: list[AxisSpec], data: Dataset) -> Grid:
    """Resolve axis specifications (time first) against the data."""
    if len(axes) != data.p + 1:
        raise ValidationError(f"need {data.p + 1} axis specs (time + {data.p} covariates), got {len(axes)}")
    return Grid(tuple(_resolve_axis(spec, i, data) for i, spec in enumerate(axes)))


@dataclass(frozen=True)
class CellStats:
    """Empirical mass, failure count and center of one cell."""

    mass: float
    failures: int
    center: tuple[float, ...]


class GridStats:
    """Per-cell empirical sub-probability mass and failure counts.

    ``mass[j]`` is the average at-risk occupation time of cell j (already
    divided by the number of subjects), so the masses total at most 1.
    ``failures[j]`` counts observed events whose (T, X(T)) lies in cell j.
    """

    def __init__(self, grid: Grid, mass: np.ndarray, failures: np.ndarray, n: int):
        self.grid = grid
        self.mass = mass
        self.failures = failures
        self.n = n

    def __len__(self) -> int:
        return self.grid.cell_count

    def __getitem__(self, j: int) -> CellStats:
        return CellStats(
            float(self.mass[j]), int(self.failures[j]), tuple(self.grid.centers[j])
        )

    @cached_property
    def occupied(self) -> np.ndarray:
        return self.mass > 0.0

    @cached_property
    def occupied_indices(self) -> np.ndarray:
        return np.flatnonzero(self.occupied)

    @cached_property
    def cell_codes(self) -> np.ndarray:
        """Per-axis ordinal coordinates of the occupied cells, shape (n_occ, n_axes)."""
        idx = self.occupied_indices
        codes = np.empty((idx.size, self.grid.n_axes), dtype=np.int64)
        rem = idx.copy()
        for a in range(self.grid.n_axes - 1, -1, -1):
            k = self.grid.shape[a]
            codes[:, a] = rem % k
            rem //= k
        return codes

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    @property
    def total_failures(self) -> int:
        return int(self.failures.sum())


def accumulate(grid: Grid, data: Dataset) -> GridStats:
    """Exact per-cell occupation mass and failure counts for a dataset."""
    n = len(data.subjects)
    if n == 0:
        raise ValidationError("cannot accumulate an empty dataset")
    n_time = grid.shape[0]
    cov_shape = grid.shape[1:]
    n_cov = int(np.prod(cov_shape)) if cov_shape else 1

    t0s, t1s, rows = [], [], []
    for subj in data.subjects:
        for seg in subj.segments:
            row = 0
            for ax, v in zip(grid.axes[1:], seg.x):
                row = row * ax.n_cells + ax.locate(v)
            t0s.append(seg.t_start)
            t1s.append(seg.t_end)
            rows.append(row)

    raw = np.zeros((n_cov, n_time), dtype=np.float64)
    _kernels.accumulate_overlap(
        np.asarray(t0s, dtype=np.float64),
        np.asarray(t1s, dtype=np.float64),
        np.asarray(rows, dtype=np.int64),
        np.ascontiguousarray(grid.time_edges, dtype=np.float64),
        raw,
    )
    # row-major full index with time slowest: j = time_idx * n_cov + cov_row
    mass = raw.T.reshape(-1) / n

    failures = np.zeros(grid.cell_count, dtype=np.int64)
    for subj in data.subjects:
        if subj.event:
            last = subj.segments[-1]
            failures[grid.locate(last.t_end, last.x)] += 1

    return GridStats(grid, mass, failures, n)

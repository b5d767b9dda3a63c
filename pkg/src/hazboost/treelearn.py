"""Shallow regression trees fit to cell functions by weighted least squares.

The tree approximates a target over the occupied cell centers, weighting
each squared residual by the cell's occupation mass.  Candidate thresholds
are exactly the grid boundaries, so every leaf is a union of whole cells and
the tree output stays inside the piecewise-constant model space.  Growth is
best-first with a total-splits budget: the leaf whose best split removes the
most weighted squared error is split next.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import HazboostError, ValidationError
from .hazrisk import CellFunction
from .partition import GridStats


class ZeroNormTree(HazboostError):
    """The fitted tree is identically zero; descent cannot proceed."""


@dataclass(frozen=True)
class LeafNode:
    value: float
    n_cells: int


@dataclass(frozen=True)
class SplitNode:
    axis: int
    threshold: float
    improvement: float
    left: "SplitNode | LeafNode"
    right: "SplitNode | LeafNode"


@dataclass(frozen=True)
class FittedTree:
    root: SplitNode | LeafNode
    splits_used: int
    cell_values: np.ndarray  # leaf value per occupied cell, 0 on empty cells


class _Node:
    __slots__ = ("rows", "axis", "code", "gain", "left", "right")

    def __init__(self, rows):
        self.rows = rows
        self.axis = -1
        self.code = -1
        self.gain = 0.0
        self.left = None
        self.right = None


def _scan_leaf(node, codes, w, wy, shape, pool):
    """Fill the node with its best (axis, code, gain); ties go to the lowest
    axis then the lowest threshold."""
    rows = node.rows

    def one(a):
        return _kernels.scan_axis_splits(
            np.ascontiguousarray(codes[rows, a]),
            np.ascontiguousarray(w[rows]),
            np.ascontiguousarray(wy[rows]),
            shape[a],
        )

    if pool is not None:
        results = list(pool.map(one, range(len(shape))))
    else:
        results = [one(a) for a in range(len(shape))]
    for a, (k, gain) in enumerate(results):
        if k >= 0 and gain > node.gain:
            node.gain = gain
            node.axis = a
            node.code = k


def fit_tree(
    target: CellFunction, stats: GridStats, max_splits: int, workers: int = 1
) -> FittedTree:
    """Best-first weighted-least-squares tree over the occupied cell centers."""
    if max_splits < 0:
        raise ValidationError("max_splits must be >= 0")
    occ = stats.occupied_indices
    if occ.size == 0:
        raise ValidationError("all cell masses are zero; nothing to fit")
    grid = stats.grid
    codes = stats.cell_codes
    w = stats.mass[occ]
    y = target.values[occ]
    wy = w * y
    shape = grid.shape

    pool = ThreadPoolExecutor(workers) if workers > 1 and grid.n_axes > 1 else None
    try:
        root = _Node(np.arange(occ.size))
        _scan_leaf(root, codes, w, wy, shape, pool)
        leaves = [root]
        splits = 0
        while splits < max_splits:
            best = None
            for node in leaves:  # creation order breaks exact gain ties
                if node.code >= 0 and (best is None or node.gain > best.gain):
                    best = node
            if best is None:
                break
            rows = best.rows
            mask = codes[rows, best.axis] <= best.code
            best.left = _Node(rows[mask])
            best.right = _Node(rows[~mask])
            best.rows = None
            leaves.remove(best)
            for child in (best.left, best.right):
                _scan_leaf(child, codes, w, wy, shape, pool)
                leaves.append(child)
            splits += 1
    finally:
        if pool is not None:
            pool.shutdown()

    cell_values = np.zeros(grid.cell_count)

    def freeze(node):
        if node.left is None:
            rows = node.rows
            value = float(wy[rows].sum() / w[rows].sum())
            cell_values[occ[rows]] = value
            return LeafNode(value, int(rows.size))
        threshold = float(grid.axes[node.axis].split_points[node.code])
        return SplitNode(
            node.axis, threshold, float(node.gain), freeze(node.left), freeze(node.right)
        )

    return FittedTree(freeze(root), splits, cell_values)


def normalize(tree: FittedTree, stats: GridStats) -> CellFunction:
    """Tree output scaled to unit L2 norm under the occupation measure."""
    v = tree.cell_values
    l2 = float(np.sqrt(np.sum(v * v * stats.mass)))
    if l2 == 0.0:
        raise ZeroNormTree("tree output is identically zero")
    return CellFunction(stats.grid, v / l2)


def split_improvements(tree: FittedTree) -> dict[int, float]:
    """Total weighted-SSE improvement attributed to each axis."""
    out: dict[int, float] = {}

    def walk(node):
        if isinstance(node, SplitNode):
            out[node.axis] = out.get(node.axis, 0.0) + node.improvement
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    return out

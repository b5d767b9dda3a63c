"""Weighted-least-squares tree fitting over occupied grid cells."""

import itertools

import numpy as np
import pytest

from hazboost import (
    AxisSpec,
    CellFunction,
    GridStats,
    ValidationError,
    accumulate,
    alignment,
    build_grid,
    fit_tree,
    gradient,
    norms,
    normalize,
    split_improvements,
)
from hazboost.hazrisk import PiecewiseLogHazard
from hazboost.treelearn import SplitNode, ZeroNormTree

from helpers import make_dataset, random_dataset, random_grid


def _uniform_stats(masses, n_time, p_shape=()):
    """Stats over a plain time grid with given per-cell masses."""
    ds = make_dataset([("a", [(0.0, 1.0) + (0.0,) * len(p_shape)], False)])
    axes = [AxisSpec.uniform(n_time)] + [
        AxisSpec.categorical(list(range(k))) for k in p_shape
    ]
    grid = build_grid(axes, ds)
    masses = np.asarray(masses, dtype=float)
    return GridStats(grid, masses, np.zeros(masses.size, dtype=np.int64), 1)


def _weighted_sse(stats, target, tree):
    occ = stats.occupied
    r = target.values[occ] - tree.cell_values[occ]
    return float(np.sum(stats.mass[occ] * r * r))


def test_no_splits_gives_weighted_mean():
    stats = _uniform_stats([0.1, 0.2, 0.3, 0.4], 4)
    target = CellFunction(stats.grid, np.array([1.0, 2.0, 3.0, 4.0]))
    tree = fit_tree(target, stats, max_splits=0)
    mean = np.sum(stats.mass * target.values) / np.sum(stats.mass)
    assert tree.splits_used == 0
    assert np.allclose(tree.cell_values, mean)


def test_two_cells_one_split_exact():
    stats = _uniform_stats([0.4, 0.6], 2)
    target = CellFunction(stats.grid, np.array([1.0, -2.0]))
    tree = fit_tree(target, stats, max_splits=1)
    assert tree.splits_used == 1
    assert np.allclose(tree.cell_values, target.values)
    assert _weighted_sse(stats, target, tree) == pytest.approx(0.0, abs=1e-16)


def test_best_split_matches_exhaustive_search():
    masses = np.array([0.1, 0.2, 0.3, 0.4])
    stats = _uniform_stats(masses, 4)
    target = CellFunction(stats.grid, np.array([1.0, 1.0, -1.0, -1.0]))
    tree = fit_tree(target, stats, max_splits=1)
    root = tree.root
    assert isinstance(root, SplitNode)
    assert root.axis == 0 and root.threshold == pytest.approx(0.5)

    # exhaustive oracle over the 3 candidate thresholds
    def sse_for(cut):
        best = 0.0
        y = target.values
        for side in (slice(0, cut + 1), slice(cut + 1, 4)):
            w, v = masses[side], y[side]
            mean = np.sum(w * v) / np.sum(w)
            best += float(np.sum(w * (v - mean) ** 2))
        return best

    base_mean = np.sum(masses * target.values) / masses.sum()
    base_sse = float(np.sum(masses * (target.values - base_mean) ** 2))
    gains = [base_sse - sse_for(cut) for cut in range(3)]
    assert root.improvement == pytest.approx(max(gains), abs=1e-12)
    assert int(np.argmax(gains)) == 1  # the separating breakpoint


def test_saturated_tree_reproduces_target():
    rng = np.random.default_rng(41)
    for _ in range(10):
        ds = random_dataset(rng, p=1)
        grid = random_grid(rng, ds)
        stats = accumulate(grid, ds)
        n_occ = int(stats.occupied.sum())
        target = CellFunction(grid, np.zeros(grid.cell_count))
        target.values[stats.occupied] = rng.normal(0, 1, n_occ)
        tree = fit_tree(target, stats, max_splits=n_occ - 1)
        assert _weighted_sse(stats, target, tree) == pytest.approx(0.0, abs=1e-18)


def test_sse_non_increasing_in_splits():
    rng = np.random.default_rng(42)
    ds = random_dataset(rng, p=2, max_subjects=6)
    grid = random_grid(rng, ds)
    stats = accumulate(grid, ds)
    target = CellFunction(grid, np.zeros(grid.cell_count))
    target.values[stats.occupied] = rng.normal(0, 1, int(stats.occupied.sum()))
    sses = [
        _weighted_sse(stats, target, fit_tree(target, stats, max_splits=s))
        for s in range(6)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(sses, sses[1:]))


def test_all_zero_masses_rejected():
    stats = _uniform_stats([0.0, 0.0], 2)
    target = CellFunction(stats.grid, np.zeros(2))
    with pytest.raises(ValidationError, match="zero"):
        fit_tree(target, stats, max_splits=1)


def test_normalize_constant_tree():
    stats = _uniform_stats([0.25], 1)
    tree = fit_tree(CellFunction(stats.grid, np.array([2.0])), stats, max_splits=0)
    unit = normalize(tree, stats)
    # constant 2 with total mass 1/4 has norm 1, so the unit value is 2
    assert unit.values[0] == pytest.approx(2.0, abs=1e-14)
    assert norms(unit, stats).l2 == pytest.approx(1.0, abs=1e-12)


def test_normalize_unit_norm_random():
    rng = np.random.default_rng(43)
    for _ in range(10):
        ds = random_dataset(rng, p=1)
        grid = random_grid(rng, ds)
        stats = accumulate(grid, ds)
        target = CellFunction(grid, np.zeros(grid.cell_count))
        target.values[stats.occupied] = rng.normal(0, 1, int(stats.occupied.sum()))
        unit = normalize(fit_tree(target, stats, max_splits=2), stats)
        assert norms(unit, stats).l2 == pytest.approx(1.0, abs=1e-12)


def test_normalize_zero_tree_signals_convergence():
    stats = _uniform_stats([0.5, 0.5], 2)
    tree = fit_tree(CellFunction(stats.grid, np.zeros(2)), stats, max_splits=1)
    with pytest.raises(ZeroNormTree):
        normalize(tree, stats)


def test_saturated_tree_is_a_unit_gradient():
    """Fitting the negative gradient exactly yields alignment -1 for the tree
    and +1 for the flipped direction used in descent."""
    ds = make_dataset([("A", [(0.0, 0.5)], True), ("B", [(0.0, 1.0)], False)])
    grid = build_grid([AxisSpec.uniform(2)], ds)
    stats = accumulate(grid, ds)
    g = gradient(PiecewiseLogHazard.zero(grid), stats)
    tree = fit_tree(CellFunction(grid, -g.values), stats, max_splits=1)
    unit = normalize(tree, stats)
    assert alignment(g, unit, stats) == pytest.approx(-1.0, abs=1e-12)
    flipped = CellFunction(grid, -unit.values)
    assert alignment(g, flipped, stats) == pytest.approx(1.0, abs=1e-12)


def test_split_improvements_aggregation():
    stats = _uniform_stats([0.2, 0.2, 0.2, 0.2], 4)
    target = CellFunction(stats.grid, np.array([0.0, 1.0, 3.0, 10.0]))
    single = fit_tree(target, stats, max_splits=0)
    assert split_improvements(single) == {}
    tree = fit_tree(target, stats, max_splits=2)
    imp = split_improvements(tree)
    assert set(imp) == {0} and tree.splits_used == 2
    nodes = [tree.root, tree.root.left, tree.root.right]
    total = sum(n.improvement for n in nodes if isinstance(n, SplitNode))
    assert imp[0] == pytest.approx(total)


def test_tie_breaks_prefer_lowest_axis():
    ds = make_dataset(
        [("a", [(0.0, 1.0, float(v))], False) for v in (0, 1)]
    )
    grid = build_grid([AxisSpec.uniform(2), AxisSpec.categorical([0.0, 1.0])], ds)
    masses = np.full(4, 0.25)
    stats = GridStats(grid, masses, np.zeros(4, dtype=np.int64), 1)
    # +1 on (t0, x0), -1 on (t1, x1): splitting on time or covariate gives
    # the same gain, so the time axis must win
    target = CellFunction(grid, np.array([1.0, 0.0, 0.0, -1.0]))
    tree = fit_tree(target, stats, max_splits=1)
    assert isinstance(tree.root, SplitNode) and tree.root.axis == 0


def test_deterministic_across_workers():
    rng = np.random.default_rng(44)
    ds = random_dataset(rng, p=2, max_subjects=6)
    grid = random_grid(rng, ds)
    stats = accumulate(grid, ds)
    target = CellFunction(grid, np.zeros(grid.cell_count))
    target.values[stats.occupied] = rng.normal(0, 1, int(stats.occupied.sum()))
    t1 = fit_tree(target, stats, max_splits=3, workers=1)
    t4 = fit_tree(target, stats, max_splits=3, workers=4)
    assert np.array_equal(t1.cell_values, t4.cell_values)

    def flat(node):
        if isinstance(node, SplitNode):
            return [(node.axis, node.threshold)] + flat(node.left) + flat(node.right)
        return [(node.value,)]

    assert flat(t1.root) == flat(t4.root)

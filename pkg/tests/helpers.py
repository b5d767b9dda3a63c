"""Shared construction helpers for the test suite."""

import numpy as np

from hazboost import AxisSpec, Dataset, Segment, Subject, build_grid


def make_dataset(spec, horizon=1.0, p=None):
    """Build a Dataset from literal subject tuples.

    ``spec`` is a list of (id, segments, event) where each segment is
    (t_start, t_end, *covariates) in normalized units.
    """
    subjects = []
    for sid, segs, event in spec:
        segments = tuple(
            Segment(s[0], s[1], tuple(float(v) for v in s[2:]),
                    s[0] * horizon, s[1] * horizon)
            for s in segs
        )
        subjects.append(Subject(sid, segments, event))
    if p is None:
        p = len(subjects[0].segments[0].x) if subjects else 0
    return Dataset(tuple(subjects), p, horizon)


def single_failure_dataset():
    """One subject at risk on (0, 1/4] that fails at 1/4, no covariates."""
    return make_dataset([("A", [(0.0, 0.25)], True)])


def random_dataset(rng, p=1, max_subjects=6, event_prob=0.7):
    """Random small valid dataset; covariates drawn from {0, 1, 2}."""
    n = int(rng.integers(1, max_subjects + 1))
    spec = []
    for i in range(n):
        n_seg = int(rng.integers(1, 4))
        pts = np.sort(rng.uniform(0.0, 1.0, size=2 * n_seg))
        segs = []
        for k in range(n_seg):
            a, b = float(pts[2 * k]), float(pts[2 * k + 1])
            if b - a > 1e-9:
                segs.append((a, b) + tuple(float(rng.integers(0, 3)) for _ in range(p)))
        if not segs:
            segs = [(0.25, 0.75) + tuple(float(rng.integers(0, 3)) for _ in range(p))]
        event = bool(rng.random() < event_prob)
        spec.append((f"s{i:03d}", segs, event))
    return make_dataset(spec)


def random_grid(rng, data):
    """A small random grid compatible with the dataset."""
    axes = [AxisSpec.uniform(int(rng.integers(2, 5)))]
    for _ in range(data.p):
        axes.append(
            AxisSpec.midpoints() if rng.random() < 0.5 else AxisSpec.categorical()
        )
    return build_grid(axes, data)

"""Functional survival data: at-risk segments, subjects, and CSV ingestion.

A subject is observed through covariate-constant at-risk segments on the
normalized time interval (0, 1].  Intervals are left-open right-closed, so
the covariate value in force at an event time T is the one of the segment
whose closed right end contains T.  Gaps between segments mean the subject
is not at risk there; off-risk covariates are represented by absence, never
by a sentinel value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

_BASE_COLUMNS = ("subject_id", "t_start", "t_end", "event")


def _fmt(value: float) -> str:
    """Shortest round-trip decimal form; keeps re-serialization byte-stable."""
    return repr(float(value))


@dataclass(frozen=True)
class Segment:
    """One covariate-constant at-risk stretch (t_start, t_end].

    Times are stored normalized to the unit interval; the raw (pre-division)
    times are kept alongside so files can be rewritten byte-identically.
    """

    t_start: float
    t_end: float
    x: tuple[float, ...]
    raw_start: float
    raw_end: float

    def __post_init__(self):
        if not (0.0 <= self.t_start < self.t_end <= 1.0):
            raise ValidationError(
                f"segment ({self.t_start}, {self.t_end}] outside (0, 1] or empty"
            )
        if not all(math.isfinite(v) for v in self.x):
            raise ValidationError("non-finite covariate value")

    @property
    def length(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class Subject:
    """One individual's trajectory: ordered segments plus the event flag."""

    id: str
    segments: tuple[Segment, ...]
    event: bool

    def __post_init__(self):
        if not self.segments:
            raise ValidationError(f"subject {self.id!r}: no at-risk segments")
        dims = {len(s.x) for s in self.segments}
        if len(dims) != 1:
            raise ValidationError(f"subject {self.id!r}: inconsistent covariate dimension")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.t_end > b.t_start:
                raise ValidationError(
                    f"subject {self.id!r}: overlapping segments "
                    f"({a.t_start},{a.t_end}] and ({b.t_start},{b.t_end}]"
                )

    @property
    def event_time(self) -> float | None:
        """Failure time T, present iff the subject failed (else T is infinite)."""
        return self.segments[-1].t_end if self.event else None

    @property
    def at_risk_time(self) -> float:
        return sum(s.length for s in self.segments)

    def covariate_at(self, t: float) -> tuple[float, ...] | None:
        """Covariate vector of the segment containing t, or None when the
        subject is not at risk at t (left-open right-closed membership)."""
        for seg in self.segments:
            if seg.t_start < t <= seg.t_end:
                return seg.x
            if t <= seg.t_start:
                break
        return None


@dataclass(frozen=True)
class Dataset:
    """A collection of subjects sharing covariate dimension p.

    ``horizon`` is the original time unit scale; raw file times divided by it
    give normalized times, and reports can multiply back out.
    """

    subjects: tuple[Subject, ...]
    p: int
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValidationError("horizon must be positive")
        for s in self.subjects:
            if len(s.segments[0].x) != self.p:
                raise ValidationError(
                    f"subject {s.id!r}: covariate dimension {len(s.segments[0].x)} != {self.p}"
                )

    def __len__(self) -> int:
        return len(self.subjects)

    @property
    def n_events(self) -> int:
        return sum(1 for s in self.subjects if s.event)


def _parse_float(text: str, what: str, sid: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"subject {sid!r}: cannot parse {what} {text!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"subject {sid!r}: non-finite {what}")
    return v


def ingest_csv(path: str | Path, horizon: float) -> Dataset:
    """Read the long-format subjects CSV and normalize times by ``horizon``.

    Expected header: ``subject_id,t_start,t_end,event,x1,...,xp`` with one row
    per covariate-constant at-risk segment and raw (pre-normalization) times.
    """
    if horizon <= 0:
        raise ValidationError("horizon must be positive")
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: missing header") from None
        if tuple(header[:4]) != _BASE_COLUMNS:
            raise ValidationError(
                f"{path}: header must start with {','.join(_BASE_COLUMNS)}"
            )
        p = len(header) - 4
        expected = [f"x{i}" for i in range(1, p + 1)]
        if header[4:] != expected:
            raise ValidationError(f"{path}: covariate columns must be {expected}")

        groups: dict[str, list[list[str]]] = {}
        order: list[str] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4 + p:
                raise ValidationError(f"{path}:{lineno}: expected {4 + p} fields")
            sid = row[0]
            if sid not in groups:
                groups[sid] = []
                order.append(sid)
            groups[sid].append(row)

    subjects = []
    for sid in order:
        rows = sorted(groups[sid], key=lambda r: float(r[1]))
        segments = []
        event = False
        for k, row in enumerate(rows):
            raw_start = _parse_float(row[1], "t_start", sid)
            raw_end = _parse_float(row[2], "t_end", sid)
            flag = _parse_float(row[3], "event flag", sid)
            if flag not in (0.0, 1.0):
                raise ValidationError(f"subject {sid!r}: event flag must be 0 or 1")
            if raw_start >= raw_end:
                raise ValidationError(
                    f"subject {sid!r}: t_start {raw_start} >= t_end {raw_end}"
                )
            if raw_start < 0 or raw_end > horizon:
                raise ValidationError(
                    f"subject {sid!r}: times ({raw_start}, {raw_end}] exceed horizon {horizon}"
                )
            if flag == 1.0:
                if k != len(rows) - 1:
                    raise ValidationError(
                        f"subject {sid!r}: event marked on a non-final segment"
                    )
                event = True
            x = tuple(_parse_float(v, f"x{i + 1}", sid) for i, v in enumerate(row[4:]))
            segments.append(
                Segment(raw_start / horizon, raw_end / horizon, x, raw_start, raw_end)
            )
        subjects.append(Subject(sid, tuple(segments), event))

    return Dataset(tuple(subjects), p, horizon)


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Write the canonical long-format CSV (raw times, shortest float repr)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(_BASE_COLUMNS) + [f"x{i}" for i in range(1, dataset.p + 1)])
        for subj in dataset.subjects:
            last = len(subj.segments) - 1
            for k, seg in enumerate(subj.segments):
                flag = "1" if (subj.event and k == last) else "0"
                writer.writerow(
                    [subj.id, _fmt(seg.raw_start), _fmt(seg.raw_end), flag]
                    + [_fmt(v) for v in seg.x]
                )

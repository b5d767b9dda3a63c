"""Discrete-event multi-server queue with state-dependent service hazards.

Customers arrive by a nonhomogeneous Poisson process with a daily
piecewise-constant rate profile, are typed at arrival, and are served
first-come-first-serve by a station that can work on up to ``capacity``
customers simultaneously.  A customer's service completion intensity depends
on the elapsed service time, the number of customers concurrently in service
(their own presence included) and their type.  Completions are sampled by
thinning against a dominating rate bound, which stays valid through covariate
jumps because candidates are accepted using the state at the candidate time.

Observation is truncated at ``censor_horizon``: a customer still in service
at the horizon departs censored.  Every departure (completed or censored)
counts toward the completion target.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ValidationError
from .funcdata import Dataset, Segment, Subject
from .hazrisk import CellFunction
from .partition import Grid


def service_rate(t: float, in_service: float, ctype: float) -> float:
    """Default service completion rate; ``t`` is elapsed service time in hours.

    Type-1 customers slow down over time and with lighter workload, type-2
    customers speed up with both.
    """
    if ctype == 1:
        return 1.5 - 0.5 / in_service - 0.75 * (t - 0.5)
    return 0.5 + 0.5 / in_service + 0.5 * (t - 0.5)


@dataclass(frozen=True)
class HazardSpec:
    """Completion-rate rule plus the dominating bound used for thinning."""

    rate: callable = service_rate
    bound: float = 2.0


@dataclass(frozen=True)
class SimConfig:
    arrival_breaks: tuple[float, ...] = (0.0, 12.0, 24.0)
    arrival_rates: tuple[float, ...] = (0.5, 20.0)
    capacity: int = 3
    type_probs: tuple[float, float] = (0.5, 0.5)
    completions: int = 5000
    censor_horizon: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if len(self.arrival_rates) != len(self.arrival_breaks) - 1:
            raise ValidationError("need one arrival rate per break interval")
        if self.arrival_breaks[0] != 0.0 or self.arrival_breaks[-1] != 24.0:
            raise ValidationError("arrival breaks must span [0, 24] hours")
        if any(r < 0 for r in self.arrival_rates):
            raise ValidationError("arrival rates must be nonnegative")
        if not any(r > 0 for r in self.arrival_rates):
            raise ValidationError("at least one arrival rate must be positive")
        if self.capacity < 1:
            raise ValidationError("capacity must be >= 1")
        if abs(sum(self.type_probs) - 1.0) > 1e-12 or any(p < 0 for p in self.type_probs):
            raise ValidationError("type probabilities must be nonnegative and sum to 1")
        if self.completions < 1:
            raise ValidationError("completions target must be >= 1")
        if self.censor_horizon <= 0:
            raise ValidationError("censor horizon must be positive")


class _Customer:
    __slots__ = ("idx", "ctype", "start", "seg_open", "seg_x1", "pieces", "active")

    def __init__(self, idx, ctype):
        self.idx = idx
        self.ctype = ctype
        self.start = None
        self.seg_open = 0.0
        self.seg_x1 = 0
        self.pieces = []
        self.active = False


_ARRIVAL, _CANDIDATE, _CENSOR = 0, 1, 2


def simulate(config: SimConfig = SimConfig(), hazard: HazardSpec | None = None):
    """Run the queue until the completion target and return (Dataset, summary).

    Each departed customer becomes one subject whose segments break exactly
    where the in-service count changes; raw times are elapsed service hours,
    normalized by the censor horizon so observation lives on (0, 1].
    """
    hazard = hazard or HazardSpec()
    rng = np.random.default_rng(config.seed)
    horizon = config.censor_horizon
    bound = hazard.bound

    breaks = config.arrival_breaks
    rates = config.arrival_rates

    def next_arrival(t):
        """Piecewise-exponential sampling across the repeating daily profile."""
        while True:
            day, tod = divmod(t, 24.0)
            k = min(int(np.searchsorted(breaks, tod, side="right")) - 1, len(rates) - 1)
            end = day * 24.0 + breaks[k + 1]
            rate = rates[k]
            if rate <= 0.0:
                t = end
                continue
            gap = rng.exponential(1.0 / rate)
            if t + gap <= end:
                return t + gap
            t = end

    heap = []
    seq = 0

    def push(time, kind, payload):
        nonlocal seq
        heapq.heappush(heap, (time, seq, kind, payload))
        seq += 1

    in_service: list[_Customer] = []
    queue: deque[_Customer] = deque()
    subjects: list[Subject] = []
    n_censored = 0
    total_duration = 0.0
    arrivals = 0
    finished = 0
    now = 0.0

    def sync_segments(now):
        """Close and reopen segments of serving customers after a net change
        in the in-service count."""
        cnt = len(in_service)
        for c in in_service:
            if c.seg_x1 != cnt:
                e = now - c.start
                if e > c.seg_open:
                    c.pieces.append((c.seg_open, e, c.seg_x1))
                    c.seg_open = e
                c.seg_x1 = cnt

    def start_service(c, now):
        c.start = now
        c.seg_open = 0.0
        c.active = True
        in_service.append(c)
        c.seg_x1 = len(in_service)
        push(now + rng.exponential(1.0 / bound), _CANDIDATE, c)
        push(now + horizon, _CENSOR, c)

    def emit(c, observed_end, completed):
        nonlocal n_censored, total_duration
        if observed_end > c.seg_open:
            c.pieces.append((c.seg_open, observed_end, c.seg_x1))
        segments = tuple(
            Segment(a / horizon, b / horizon, (float(x1), float(c.ctype)), a, b)
            for a, b, x1 in c.pieces
        )
        subjects.append(Subject(f"c{c.idx:06d}", segments, completed))
        if not completed:
            n_censored += 1
        total_duration += observed_end

    def depart(c, now, completed, observed_end):
        nonlocal finished
        emit(c, observed_end, completed)
        c.active = False
        in_service.remove(c)
        finished += 1
        if queue and len(in_service) < config.capacity:
            start_service(queue.popleft(), now)
        sync_segments(now)

    push(next_arrival(0.0), _ARRIVAL, None)

    while finished < config.completions:
        if not heap:
            raise NumericError("event queue drained before reaching the target")
        now, _, kind, payload = heapq.heappop(heap)

        if kind == _ARRIVAL:
            arrivals += 1
            ctype = 1 if rng.random() < config.type_probs[0] else 2
            c = _Customer(arrivals, ctype)
            if len(in_service) < config.capacity:
                start_service(c, now)
                sync_segments(now)
            else:
                queue.append(c)
            push(next_arrival(now), _ARRIVAL, None)

        elif kind == _CANDIDATE:
            c = payload
            if not c.active:
                continue
            elapsed = now - c.start
            if elapsed >= horizon:
                continue  # the censor event at the horizon settles this customer
            rate = hazard.rate(elapsed, float(len(in_service)), float(c.ctype))
            if rate < 0.0:
                raise NumericError(
                    f"service rate {rate} is negative at elapsed {elapsed}"
                )
            if rate > bound:
                raise NumericError(
                    f"service rate {rate} exceeds the thinning bound {bound}"
                )
            if rng.random() * bound < rate:
                depart(c, now, True, elapsed)
            else:
                push(now + rng.exponential(1.0 / bound), _CANDIDATE, c)

        else:  # censor deadline
            c = payload
            if not c.active:
                continue
            depart(c, now, False, horizon)

    data = Dataset(tuple(subjects), 2, horizon)
    summary = {
        "completions": finished,
        "censored_fraction": n_censored / finished,
        "mean_duration": total_duration / finished,
        "sim_days": int(math.ceil(now / 24.0)),
    }
    return data, summary


def true_hazard_table(grid: Grid, rate=service_rate, horizon: float = 1.0) -> CellFunction:
    """Evaluate a hazard law at the cell centers of a grid.

    Fitted models live in normalized time, so the law (whose time argument is
    in raw units) is rescaled: per normalized unit the rate is
    ``horizon * rate(horizon * t, ...)``.
    """
    centers = grid.centers
    values = np.array(
        [horizon * rate(horizon * c[0], *c[1:]) for c in centers], dtype=np.float64
    )
    return CellFunction(grid, values)

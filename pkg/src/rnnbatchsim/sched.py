"""Batch formation policies: padding, bucketing, cellular, ebatch.

All four answer the same question -- given the waiting queue, which request
segments go on which processing lane for the next dispatch -- but differ in
granularity and in whether a running batch can still be modified:

* padding: one whole request per lane, everyone padded to the longest.
* bucketing: padding restricted to requests whose lengths fall in the same
  bucket, which bounds padding by the bucket width.
* cellular: dispatches a few time-steps (a cell) of one layer at a time;
  requests join and retire at cell granularity.
* ebatch: greedy multiway partitioning of all queued requests over the
  lanes, a per-lane time-step budget N, a fill timeout T, lane-idle refills
  while the first layer runs, and request splitting across batches.

The partitioning heart is longest-processing-time (LPT): requests sorted by
descending remaining length, each placed on the lane with the smallest total
so far. Ties break toward the earlier-queued request and the lower lane
index, which keeps every formation decision deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

POLICIES = ("padding", "bucketing", "cellular", "ebatch")


@dataclass(frozen=True)
class Segment:
    request_id: int
    start_timestep: int
    num_timesteps: int


@dataclass
class BatchPlan:
    """Lane assignments for one dispatch.

    The layer span is [first_layer, first_layer + num_layers): whole-sequence
    policies dispatch all layers from 0, cellular dispatches a single layer.
    """

    batch_id: int
    lane_segments: list[list[Segment]]  # index = lane id; empty list = idle lane
    lane_budget: int
    num_layers: int
    first_layer: int = 0
    joins_allowed: bool = False

    def active_lanes(self) -> int:
        return sum(1 for segs in self.lane_segments if segs)


@dataclass(frozen=True)
class PolicyConfig:
    policy: str
    batch_size: int = 64
    bucket_width: int = 0
    bucket_mode: str = "fixed"  # "anchored" reproduces similarity-to-oldest grouping
    cell_granularity: int = 1
    max_timesteps_per_lane: int = 0  # N; 0 = longest-sequence rule
    timeout_ms: float = 0.0          # T
    allow_joins: bool = True         # ebatch lane-idle refills during layer 0
    n_zero_budget: str = "longest_sequence"  # or "max_lane_total"

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r} (expected one of {POLICIES})")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.bucket_width < 0:
            raise ValueError("bucket_width must be >= 0")
        if self.bucket_mode not in ("fixed", "anchored"):
            raise ValueError("bucket_mode must be 'fixed' or 'anchored'")
        if self.cell_granularity < 1:
            raise ValueError("cell_granularity must be >= 1")
        if self.max_timesteps_per_lane < 0:
            raise ValueError("max_timesteps_per_lane must be >= 0")
        if self.timeout_ms < 0:
            raise ValueError("timeout_ms must be >= 0")
        if self.n_zero_budget not in ("longest_sequence", "max_lane_total"):
            raise ValueError("n_zero_budget must be 'longest_sequence' or 'max_lane_total'")

    @property
    def timeout_s(self) -> float:
        return self.timeout_ms * 1e-3


@dataclass
class PendingRequest:
    """Queue entry; done_steps > 0 marks the residual of a split request."""

    id: int
    arrival: float
    total_steps: int
    done_steps: int = 0
    blocked_batch: int = -1  # batch id whose completion this residual awaits

    @property
    def remaining(self) -> int:
        return self.total_steps - self.done_steps


def greedy_partition(lengths, num_lanes: int) -> list[list[int]]:
    """LPT assignment of request indices to lanes.

    Processes lengths in descending order, placing each on the lane with the
    minimum running total. Length ties go to the lower original index, lane
    -total ties to the lower lane index. Empty input yields empty lanes.
    """
    if num_lanes < 1:
        raise ValueError("num_lanes must be >= 1")
    arr = np.asarray(lengths, dtype=np.int64)
    order = np.argsort(-arr, kind="stable").astype(np.int64)
    taken, lane_of, _starts, _totals = kernels.lpt_pack(arr, order, num_lanes, 0)
    lanes: list[list[int]] = [[] for _ in range(num_lanes)]
    for j in range(taken):
        lanes[lane_of[j]].append(int(order[j]))
    return lanes


def lane_totals(partition, lengths) -> list[int]:
    return [sum(lengths[i] for i in lane) for lane in partition]


def form_batch_padding(pending: list[PendingRequest], batch_size: int,
                       num_lanes: int, num_layers: int, batch_id: int = 0) -> BatchPlan:
    """Oldest batch_size requests, one per lane, padded to the longest."""
    take = pending[:batch_size]
    budget = max(p.remaining for p in take)
    segments = [[Segment(p.id, p.done_steps, p.remaining)] for p in take]
    segments += [[] for _ in range(num_lanes - len(take))]
    return BatchPlan(batch_id, segments, budget, num_layers, joins_allowed=False)


def bucket_index(length: int, width: int) -> int:
    """Fixed non-overlapping buckets [k*(w+1), k*(w+1) + w]."""
    return length // (width + 1)


def select_bucket(pending: list[PendingRequest], batch_size: int, width: int,
                  mode: str) -> list[PendingRequest]:
    """Members of the oldest request's bucket, FIFO, up to batch_size."""
    anchor = pending[0].remaining
    if mode == "fixed":
        key = bucket_index(anchor, width)
        match = lambda n: bucket_index(n, width) == key
    else:  # anchored: similarity to the oldest request
        match = lambda n: abs(n - anchor) <= width
    out = []
    for p in pending:
        if match(p.remaining):
            out.append(p)
            if len(out) == batch_size:
                break
    return out


def form_batch_bucketing(pending: list[PendingRequest], batch_size: int,
                         width: int, num_lanes: int, num_layers: int,
                         mode: str = "fixed", batch_id: int = 0) -> BatchPlan:
    take = select_bucket(pending, batch_size, width, mode)
    budget = max(p.remaining for p in take)
    segments = [[Segment(p.id, p.done_steps, p.remaining)] for p in take]
    segments += [[] for _ in range(num_lanes - len(take))]
    return BatchPlan(batch_id, segments, budget, num_layers, joins_allowed=False)


@dataclass
class CellularProgress:
    """Cellular-policy view of a request: which cell it evaluates next.

    Cells advance block-major: block b (time-steps [b*g, b*g + g)) passes
    through every layer before block b+1 starts.
    """

    id: int
    arrival: float
    total_steps: int
    block: int = 0
    layer_in_block: int = 0

    def segment_steps(self, granularity: int) -> int:
        return min(granularity, self.total_steps - self.block * granularity)


def step_cellular(requests: list[CellularProgress], batch_size: int,
                  cell_granularity: int, batch_id: int = 0) -> BatchPlan | None:
    """One cellular dispatch: the oldest request's layer, co-riders welcome.

    Up to batch_size requests whose next cell sits at the same layer run
    together, each contributing its own block's time-steps; the lane budget
    is the largest contribution (at most the cell granularity).
    """
    ready = [r for r in requests if r.block * cell_granularity < r.total_steps]
    if not ready:
        return None
    oldest = min(ready, key=lambda r: (r.arrival, r.id))
    cohort = sorted((r for r in ready if r.layer_in_block == oldest.layer_in_block),
                    key=lambda r: (r.arrival, r.id))[:batch_size]
    segments = [[Segment(r.id, r.block * cell_granularity,
                         r.segment_steps(cell_granularity))] for r in cohort]
    budget = max(s[0].num_timesteps for s in segments)
    return BatchPlan(batch_id, segments, budget, num_layers=1,
                     first_layer=oldest.layer_in_block)


def on_lane_idle(pending: list[PendingRequest], current_layer: int,
                 slots_used: int, lane_budget: int,
                 batch_id: int) -> Segment | None:
    """Refill decision when a lane runs out of useful time-steps.

    Joins are only legal while the first layer runs; afterwards the lane
    power-gates for the rest of the batch. The oldest queued request claims
    the free slots, split at the remaining budget (its residual stays queued,
    ineligible until this batch completes).
    """
    if current_layer != 0:
        return None
    cap = lane_budget - slots_used
    if cap <= 0:
        return None
    for p in pending:
        if p.blocked_batch == batch_id:
            continue
        steps = min(p.remaining, cap)
        segment = Segment(p.id, p.done_steps, steps)
        if steps == p.remaining:
            pending.remove(p)
        else:
            p.done_steps += steps
            p.blocked_batch = batch_id
        return segment
    return None


@dataclass
class EBatchFormation:
    plan: BatchPlan
    consumed: list[int] = field(default_factory=list)   # pending indices fully taken
    splits: list[tuple[int, int]] = field(default_factory=list)  # (pending idx, steps taken)


def form_batch_ebatch(pending: list[PendingRequest], num_lanes: int, n_cap: int,
                      num_layers: int, batch_id: int = 0,
                      n_zero_budget: str = "longest_sequence",
                      allow_joins: bool = True) -> EBatchFormation:
    """Greedy partition of all queued requests with the per-lane budget rule.

    The budget is N when N > 0; for N = 0 it is the longest remaining
    sequence in the batch (default) or the maximum lane total (legacy mode).
    Requests straddling the budget are split; requests wholly beyond every
    lane's budget stay queued untouched.
    """
    lengths = np.fromiter((p.remaining for p in pending), dtype=np.int64,
                          count=len(pending))
    if n_cap > 0:
        cap = n_cap
    elif n_zero_budget == "longest_sequence":
        cap = int(lengths.max())
    else:
        cap = 0
    order = np.argsort(-lengths, kind="stable").astype(np.int64)
    taken, lane_of, starts, totals = kernels.lpt_pack(lengths, order, num_lanes, cap)
    max_total = int(totals.max()) if len(totals) else 0
    budget = min(cap, max_total) if cap > 0 else max_total

    segments: list[list[Segment]] = [[] for _ in range(num_lanes)]
    formation = EBatchFormation(
        BatchPlan(batch_id, segments, budget, num_layers, joins_allowed=allow_joins))
    placed: list[list[tuple[int, int, int]]] = [[] for _ in range(num_lanes)]
    for j in range(taken):
        idx = int(order[j])
        p = pending[idx]
        steps = min(p.remaining, budget - int(starts[j]))
        placed[lane_of[j]].append((int(starts[j]), idx, steps))
        if steps == p.remaining:
            formation.consumed.append(idx)
        else:
            formation.splits.append((idx, steps))
    for lane, items in enumerate(placed):
        for _start, idx, steps in sorted(items):
            p = pending[idx]
            segments[lane].append(Segment(p.id, p.done_steps, steps))
    return formation

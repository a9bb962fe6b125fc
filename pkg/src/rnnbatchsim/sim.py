"""Deterministic discrete-event engine tying workload, policy, accelerator
and energy models together.

The engine owns all mutable state; accelerator and energy models are pure.
Determinism comes from a total event order: arrivals are consumed from the
(pre-generated, sorted) trace before any same-time event, heap events carry
a (time, kind, sequence) key with kind ranked Arrival < LaneIdle <
BatchLayerComplete < TimeoutExpired, and every scheduling decision runs on a
quiescent state after all events at a timestamp have drained.

Batch-granular policies (padding, bucketing, ebatch) run through the event
loop proper. A running batch evaluates layer 0 first; for ebatch that phase
is join-enabled: lanes that exhaust their useful time-steps raise lane-idle
events and the oldest eligible queued request is spliced into the free slots
(split at the lane budget if it does not fit). Once layer 0 completes the
batch locks, the remaining layers are pure arithmetic, and the next batch
can only form when the accelerator goes idle again.

Cellular batching dispatches a few time-steps of one layer at a time, which
is far too fine-grained for the generic loop; it runs in the dedicated
kernel (see rnnbatchsim.kernels.CellularRunner).

Measurement: the first warmup fraction of simulated time is excluded from
all aggregates. A batch contributes energy/utilization if it was dispatched
after warm-up and finished before the horizon; a request contributes latency
if it completed inside the window. Requests still in flight at the horizon
are reported as incomplete.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .accel import AccelConfig, AcceleratorModel
from .energy import EnergyCounts, EnergyModel, requests_per_joule
from .rnn import RnnModel
from .sched import PolicyConfig, Segment, bucket_index
from .workload import LengthDistribution, Trace, TraceConfig, generate_trace


class ScenarioError(ValueError):
    """Inconsistent scenario configuration; the message names the field."""


@dataclass(frozen=True)
class SimConfig:
    duration_s: float = 600.0
    warmup_fraction: float = 0.1
    seed: int = 0
    convergence_enabled: bool = False
    convergence_rel_halfwidth: float = 0.02
    convergence_max_doublings: int = 2

    def __post_init__(self):
        if self.duration_s < 0:
            raise ScenarioError("sim.duration_s must be >= 0")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ScenarioError("sim.warmup_fraction must be in [0, 1)")


@dataclass(frozen=True)
class Scenario:
    model: RnnModel
    accel: AccelConfig
    policy: PolicyConfig
    energy: EnergyModel = field(default_factory=EnergyModel)
    arrival_rate: float = 100.0
    length_distribution: LengthDistribution = field(
        default_factory=lambda: LengthDistribution.constant(10))
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.arrival_rate <= 0:
            raise ScenarioError("workload.arrival_rate must be > 0")
        if self.policy.batch_size > self.accel.lanes:
            raise ScenarioError(
                f"policy.batch_size ({self.policy.batch_size}) exceeds "
                f"accelerator lanes ({self.accel.lanes})")

    def with_rate(self, rate: float) -> "Scenario":
        return replace(self, arrival_rate=rate)

    def with_policy(self, policy: PolicyConfig) -> "Scenario":
        return replace(self, policy=policy)

    def trace_config(self) -> TraceConfig:
        return TraceConfig(self.arrival_rate, self.sim.duration_s,
                           self.length_distribution, self.sim.seed)


@dataclass(frozen=True)
class MetricsReport:
    policy: str
    offered_rps: float
    duration_s: float
    warmup_s: float
    seed: int
    completed_requests: int
    incomplete_requests: int
    throughput_rps: float
    mean_latency_s: float
    p50_latency_s: float
    p95_latency_s: float
    p99_latency_s: float
    counts: EnergyCounts
    energy_scale: float
    energy_joules: float
    energy_components: dict
    requests_per_joule: float
    useful_frac: float
    padded_frac: float
    idle_frac: float
    mac_useful: int
    mac_padded: int
    dram_weight_bytes: int
    dram_weight_bytes_per_request: float
    weight_swaps: int
    batches_dispatched: int
    queue_mean: float
    queue_mean_q2: float
    queue_mean_q4: float
    arrived_in_window: int
    sustainable: bool
    invariant_violations: int
    energy_base_total: float  # energy before the scale factor, for exact ratios

    @property
    def padded_mac_fraction(self) -> float:
        """Share of executed MACs that were padding (excludes idle)."""
        total = self.mac_useful + self.mac_padded
        return self.mac_padded / total if total else 0.0


# event kinds, ranked for deterministic same-time ordering
_LANE_IDLE = 1
_LAYER_DONE = 2
_TIMEOUT = 3


class _QueueTracker:
    """Time-integral of the waiting-queue length, binned into window quarters."""

    def __init__(self, warmup_t: float, duration: float):
        self.w0 = warmup_t
        self.w1 = duration
        self.span = (duration - warmup_t) / 4.0
        self.last_t = 0.0
        self.count = 0
        self.total = 0.0
        self.quarters = [0.0, 0.0, 0.0, 0.0]

    def update(self, t: float):
        if t > self.last_t and self.count:
            self.total += self.count * (t - self.last_t)
            if self.span > 0:
                lo = max(self.last_t, self.w0)
                hi = min(t, self.w1)
                while lo < hi:
                    q = min(3, int((lo - self.w0) / self.span))
                    edge = min(hi, self.w0 + (q + 1) * self.span)
                    self.quarters[q] += self.count * (edge - lo)
                    lo = edge
        self.last_t = max(self.last_t, t)

    def change(self, t: float, delta: int):
        self.update(t)
        self.count += delta


class _Tally:
    """Window-filtered aggregates shared by both engine flavors."""

    def __init__(self):
        self.dram_weight_bytes = 0
        self.dram_act_bytes = 0
        self.sram_read_bytes = 0
        self.sram_write_bytes = 0
        self.mac_useful = 0
        self.mac_padded = 0
        self.useful_lane_seconds = 0.0
        self.padded_lane_seconds = 0.0
        self.lane_busy_seconds = 0.0
        self.weight_swaps = 0
        self.batches = 0
        self.latencies: list[float] = []
        self.completed = 0
        self.completed_total = 0
        self.violations = 0


class _PendingStore:
    """Arrival-ordered struct-of-arrays queue with split/block bookkeeping.

    Rows are appended in arrival order and never reordered: a split request
    keeps its row (done_steps advances), so residuals retain their original
    age. Consumed rows are tombstoned and physically removed at the next
    compaction (one vectorized pass per batch formation).
    """

    def __init__(self, capacity: int = 1024):
        self.req_id = np.empty(capacity, dtype=np.int64)
        self.arrival = np.empty(capacity, dtype=np.float64)
        self.total = np.empty(capacity, dtype=np.int64)
        self.done = np.empty(capacity, dtype=np.int64)
        self.blocked = np.empty(capacity, dtype=np.int64)
        self.dead = np.empty(capacity, dtype=bool)
        self.n = 0
        self.live = 0
        self.head = 0  # first possibly-live row

    def _grow(self):
        cap = len(self.req_id) * 2
        for name in ("req_id", "arrival", "total", "done", "blocked", "dead"):
            arr = getattr(self, name)
            new = np.empty(cap, dtype=arr.dtype)
            new[:self.n] = arr[:self.n]
            setattr(self, name, new)

    def append(self, req_id: int, arrival: float, total: int):
        if self.n == len(self.req_id):
            self._grow()
        i = self.n
        self.req_id[i] = req_id
        self.arrival[i] = arrival
        self.total[i] = total
        self.done[i] = 0
        self.blocked[i] = -1
        self.dead[i] = False
        self.n += 1
        self.live += 1

    def compact(self):
        if self.live == self.n and self.head == 0:
            return
        keep = ~self.dead[:self.n]
        for name in ("req_id", "arrival", "total", "done", "blocked", "dead"):
            arr = getattr(self, name)
            kept = arr[:self.n][keep]
            arr[:len(kept)] = kept
        self.n = self.live
        self.head = 0

    def oldest_row(self) -> int:
        """First live row, or -1. Advances the head past tombstones."""
        while self.head < self.n and self.dead[self.head]:
            self.head += 1
        return self.head if self.head < self.n else -1

    def oldest_eligible(self, exclude_blocked: int) -> int:
        i = self.oldest_row()
        while i < self.n and i >= 0:
            if not self.dead[i] and self.blocked[i] != exclude_blocked:
                return i
            i += 1
        return -1

    def unblock_all(self):
        if self.n:
            self.blocked[:self.n] = -1


class _RunningBatch:
    __slots__ = ("batch_id", "budget", "dispatch_t", "swap0_end", "layer0_end",
                 "end_t", "lane_segments", "lane_useful", "lane_occupied",
                 "completions", "in_layer0", "joins", "lanes_used", "counted")

    def __init__(self, batch_id, lanes_used, budget, dispatch_t, swap0_end,
                 layer0_end, joins):
        self.batch_id = batch_id
        self.lanes_used = lanes_used
        self.budget = budget
        self.dispatch_t = dispatch_t
        self.swap0_end = swap0_end
        self.layer0_end = layer0_end
        self.end_t = math.inf
        self.lane_segments: list[list[Segment]] = [[] for _ in range(lanes_used)]
        self.lane_useful = [0] * lanes_used
        self.lane_occupied = [0] * lanes_used
        self.completions: list[tuple[int, float]] = []
        self.in_layer0 = True
        self.joins = joins
        self.counted = False


class _BatchPolicyEngine:
    """Event loop for padding, bucketing and ebatch."""

    def __init__(self, scenario: Scenario, trace: Trace,
                 accel: AcceleratorModel, log=None, check_invariants=False):
        self.sc = scenario
        self.policy = scenario.policy
        self.kind = scenario.policy.policy
        self.trace = trace
        self.accel = accel
        self.log = log
        self.check = check_invariants
        self.L = scenario.model.num_layers
        self.duration = scenario.sim.duration_s
        self.warmup_t = self.duration * scenario.sim.warmup_fraction
        self.lanes_used = scenario.policy.batch_size
        self.timeout_s = scenario.policy.timeout_s

        lt = accel.layers
        self.step_s = [x.step_seconds for x in lt]
        self.swap_s = [x.swap_seconds for x in lt]

        self.heap: list = []
        self.seq = 0
        self.batch_counter = 0
        self.current: _RunningBatch | None = None
        self.idle_since = 0.0
        self.idle_lanes: set[int] = set()
        self.scheduled_deadline = -1.0

        # queues: ebatch needs split bookkeeping, the others are plain FIFOs
        self.store = _PendingStore() if self.kind == "ebatch" else None
        self.fifo: deque = deque()
        self.buckets: dict[int, deque] = {}
        self.taken: set[int] = set()
        self.live = 0

        self.tally = _Tally()
        self.queue = _QueueTracker(self.warmup_t, self.duration)
        self.executed = np.zeros(len(trace), dtype=np.int64) if check_invariants else None

    # -- event plumbing ------------------------------------------------------
    def _push(self, t, kind, a=0, b=0):
        self.seq += 1
        heapq.heappush(self.heap, (t, kind, self.seq, a, b))

    def run(self) -> dict:
        arr = self.trace.arrival_time
        steps = self.trace.time_steps
        n = len(arr)
        ptr = 0
        heap = self.heap
        while True:
            t_ev = heap[0][0] if heap else math.inf
            t_arr = arr[ptr] if ptr < n else math.inf
            t = t_arr if t_arr <= t_ev else t_ev
            if t > self.duration or t == math.inf:
                break
            while ptr < n and arr[ptr] <= t:
                self._on_arrival(ptr, float(arr[ptr]), int(steps[ptr]))
                ptr += 1
            while heap and heap[0][0] <= t:
                _, kind, _, a, b = heapq.heappop(heap)
                if kind == _LANE_IDLE:
                    self._on_lane_idle(t, a, b)
                elif kind == _LAYER_DONE:
                    self._on_layer_done(t, a, b)
                # _TIMEOUT only wakes the loop
            self._decide(t)
        return {"tally": self.tally, "queue": self.queue,
                "arrived": n, "in_flight_at_end": n - self.tally.completed_total}

    # -- arrivals ------------------------------------------------------------
    def _on_arrival(self, req_id: int, t: float, total: int):
        if self.kind == "ebatch":
            self.store.append(req_id, t, total)
        else:
            entry = (req_id, t, total)
            self.fifo.append(entry)
            if self.kind == "bucketing" and self.policy.bucket_mode == "fixed":
                self.buckets.setdefault(
                    bucket_index(total, self.policy.bucket_width),
                    deque()).append(entry)
        self.live += 1
        self.queue.change(t, 1)
        cur = self.current
        if (cur is not None and cur.joins and cur.in_layer0 and self.idle_lanes):
            for lane in sorted(self.idle_lanes):
                self._try_refill(t, lane)

    # -- ebatch lane refills ---------------------------------------------------
    def _on_lane_idle(self, t: float, batch_id: int, lane: int):
        cur = self.current
        if cur is None or cur.batch_id != batch_id or not cur.in_layer0 or not cur.joins:
            return
        self._try_refill(t, lane)

    def _try_refill(self, t: float, lane: int):
        cur = self.current
        step0 = self.step_s[0]
        elapsed = math.ceil((t - cur.swap0_end) / step0 - 1e-9) if step0 > 0 else 0
        slot = max(cur.lane_occupied[lane], max(0, elapsed))
        if slot >= cur.budget:
            self.idle_lanes.discard(lane)
            return
        store = self.store
        while slot < cur.budget:
            row = store.oldest_eligible(cur.batch_id)
            if row < 0:
                break
            rem = int(store.total[row] - store.done[row])
            steps = min(rem, cur.budget - slot)
            seg = Segment(int(store.req_id[row]), int(store.done[row]), steps)
            cur.lane_segments[lane].append(seg)
            cur.lane_useful[lane] += steps
            if self.log is not None:
                self.log({"ev": "join", "t": t, "batch": cur.batch_id,
                          "lane": lane, "req": seg.request_id,
                          "start": seg.start_timestep, "steps": steps})
            if steps == rem:
                cur.completions.append((seg.request_id, float(store.arrival[row])))
                store.dead[row] = True
                store.live -= 1
                self.live -= 1
                self.queue.change(t, -1)
            else:
                store.done[row] += steps
                store.blocked[row] = cur.batch_id
            slot += steps
            cur.lane_occupied[lane] = slot
        if slot < cur.budget:
            self.idle_lanes.add(lane)
        else:
            self.idle_lanes.discard(lane)

    # -- batch lifecycle -------------------------------------------------------
    def _on_layer_done(self, t: float, batch_id: int, layer: int):
        cur = self.current
        if cur is None or cur.batch_id != batch_id:
            return
        if layer == 0 and cur.in_layer0:
            cur.in_layer0 = False
            self.idle_lanes.clear()
            self._lock_batch(t)
        elif layer == self.L - 1 or self.L == 1:
            self._on_batch_end(t)

    def _lock_batch(self, t: float):
        cur = self.current
        end = cur.layer0_end
        boundaries = [end]
        for layer in range(1, self.L):
            end += self.swap_s[layer] + cur.budget * self.step_s[layer]
            boundaries.append(end)
        cur.end_t = end
        if end > self.duration:
            return  # batch straddles the horizon: abandoned, not counted
        if self.log is not None:
            for layer, t_done in enumerate(boundaries):
                self.log({"ev": "layer_done", "t": t_done, "batch": cur.batch_id,
                          "layer": layer})
        cur.counted = cur.dispatch_t >= self.warmup_t
        if cur.counted:
            self._accumulate(cur)
        if self.check:
            self._check_batch(cur)
        if self.L == 1:
            self._on_batch_end(cur.end_t)
        else:
            self._push(cur.end_t, _LAYER_DONE, cur.batch_id, self.L - 1)

    def _accumulate(self, cur: _RunningBatch):
        tally = self.tally
        tally.batches += 1
        active = [(lane, u) for lane, u in enumerate(cur.lane_useful)
                  if cur.lane_segments[lane]]
        useful = sum(u for _, u in active)
        padded = cur.budget * len(active) - useful
        for lt in self.accel.layers:
            tally.dram_weight_bytes += lt.swap_bytes
            tally.sram_write_bytes += lt.swap_bytes
            tally.weight_swaps += lt.slices
            tally.dram_act_bytes += (lt.in_bytes + lt.out_bytes) * useful
            tally.sram_read_bytes += lt.weight_bytes * cur.budget
            tally.mac_useful += lt.macs_per_step * useful
            tally.mac_padded += lt.macs_per_step * padded
            tally.useful_lane_seconds += useful * lt.step_seconds
            tally.padded_lane_seconds += padded * lt.step_seconds
            tally.lane_busy_seconds += (len(active) * lt.swap_seconds
                                        + useful * lt.step_seconds)

    def _check_batch(self, cur: _RunningBatch):
        active = sum(1 for segs in cur.lane_segments if segs)
        useful = sum(cur.lane_useful)
        padded = cur.budget * active - useful
        if useful + padded != active * cur.budget or padded < 0:
            self.tally.violations += 1
        for segs in cur.lane_segments:
            for seg in segs:
                self.executed[seg.request_id] += seg.num_timesteps * self.L

    def _on_batch_end(self, t: float):
        cur = self.current
        if self.log is not None:
            self.log({"ev": "batch_end", "t": t, "batch": cur.batch_id,
                      "completed": sorted(r for r, _ in cur.completions)})
        for req_id, arrival in cur.completions:
            self.tally.completed_total += 1
            if t >= self.warmup_t:
                self.tally.completed += 1
                self.tally.latencies.append(t - arrival)
            if self.check:
                expect = int(self.trace.time_steps[req_id]) * self.L
                if self.executed[req_id] != expect:
                    self.tally.violations += 1
        if self.kind == "ebatch":
            self.store.unblock_all()
        self.current = None
        self.idle_since = t
        self.scheduled_deadline = -1.0

    # -- formation decisions ---------------------------------------------------
    def _decide(self, t: float):
        if self.current is not None or self.live == 0:
            return
        if self.kind == "bucketing":
            ready = self._bucket_ready() >= self.policy.batch_size
        else:
            ready = self.live >= self.lanes_used
        if not ready and self.timeout_s > 0:
            anchor = max(self.idle_since, self._oldest_arrival())
            deadline = anchor + self.timeout_s
            if t < deadline:
                if self.scheduled_deadline != deadline:
                    self._push(deadline, _TIMEOUT)
                    self.scheduled_deadline = deadline
                return
        self._form(t)

    def _oldest_arrival(self) -> float:
        if self.kind == "ebatch":
            row = self.store.oldest_row()
            return float(self.store.arrival[row]) if row >= 0 else math.inf
        while self.fifo and self.fifo[0][0] in self.taken:
            self.taken.discard(self.fifo[0][0])
            self.fifo.popleft()
        return self.fifo[0][1] if self.fifo else math.inf

    def _bucket_ready(self) -> int:
        self._oldest_arrival()
        if not self.fifo:
            return 0
        if self.policy.bucket_mode == "fixed":
            key = bucket_index(self.fifo[0][2], self.policy.bucket_width)
            dq = self.buckets.get(key)
            return sum(1 for e in dq if e[0] not in self.taken) if dq else 0
        anchor = self.fifo[0][2]
        return sum(1 for e in self.fifo
                   if e[0] not in self.taken
                   and abs(e[2] - anchor) <= self.policy.bucket_width)

    def _form(self, t: float):
        if self.kind == "padding":
            take = self._pop_fifo(self.policy.batch_size)
            placed = [[(rid, 0, total)] for rid, _, total in take]
            completions = [(rid, a) for rid, a, _ in take]
            budget = max(total for _, _, total in take)
        elif self.kind == "bucketing":
            take = self._pop_bucket()
            placed = [[(rid, 0, total)] for rid, _, total in take]
            completions = [(rid, a) for rid, a, _ in take]
            budget = max(total for _, _, total in take)
        else:
            placed, completions, budget = self._form_ebatch()
            if budget == 0:
                return
        self.queue.change(t, -len(completions))
        self._dispatch(t, placed, completions, budget)

    def _pop_fifo(self, k: int):
        out = []
        while self.fifo and len(out) < k:
            entry = self.fifo.popleft()
            if entry[0] in self.taken:
                self.taken.discard(entry[0])
                continue
            out.append(entry)
        self.live -= len(out)
        return out

    def _pop_bucket(self):
        self._oldest_arrival()
        width = self.policy.bucket_width
        if self.policy.bucket_mode == "fixed":
            key = bucket_index(self.fifo[0][2], width)
            dq = self.buckets[key]
            out = []
            while dq and len(out) < self.policy.batch_size:
                entry = dq.popleft()
                if entry[0] in self.taken:
                    continue
                out.append(entry)
                self.taken.add(entry[0])
        else:
            anchor = self.fifo[0][2]
            out = []
            for entry in self.fifo:
                if entry[0] in self.taken or abs(entry[2] - anchor) > width:
                    continue
                out.append(entry)
                self.taken.add(entry[0])
                if len(out) == self.policy.batch_size:
                    break
        self.live -= len(out)
        return out

    def _form_ebatch(self):
        store = self.store
        store.compact()
        n = store.n
        if n == 0:
            return [], [], 0
        lengths = store.total[:n] - store.done[:n]
        cfg = self.policy
        if cfg.max_timesteps_per_lane > 0:
            cap = cfg.max_timesteps_per_lane
        elif cfg.n_zero_budget == "longest_sequence":
            cap = int(lengths.max())
        else:
            cap = 0
        order = np.argsort(-lengths, kind="stable").astype(np.int64)
        taken, lane_of, starts, totals = kernels.lpt_pack(
            lengths, order, self.lanes_used, cap)
        max_total = int(totals.max()) if len(totals) else 0
        budget = min(cap, max_total) if cap > 0 else max_total

        batch_id = self.batch_counter
        per_lane: list[list[tuple[int, int, int, int]]] = [
            [] for _ in range(self.lanes_used)]
        completions = []
        consumed = 0
        for j in range(taken):
            row = int(order[j])
            rem = int(lengths[row])
            steps = min(rem, budget - int(starts[j]))
            done_before = int(store.done[row])
            per_lane[lane_of[j]].append((int(starts[j]), int(store.req_id[row]),
                                         done_before, steps))
            if steps == rem:
                completions.append((int(store.req_id[row]), float(store.arrival[row])))
                store.dead[row] = True
                store.live -= 1
                consumed += 1
            else:
                store.done[row] = done_before + steps
                store.blocked[row] = batch_id
        self.live -= consumed
        placed = [[(rid, done, steps) for _, rid, done, steps in sorted(items)]
                  for items in per_lane]
        return placed, completions, budget

    def _dispatch(self, t, placed, completions, budget):
        batch_id = self.batch_counter
        self.batch_counter += 1
        swap0_end = t + self.swap_s[0]
        layer0_end = swap0_end + budget * self.step_s[0]
        joins = self.kind == "ebatch" and self.policy.allow_joins
        cur = _RunningBatch(batch_id, self.lanes_used, budget, t, swap0_end,
                            layer0_end, joins)
        for lane, items in enumerate(placed[:self.lanes_used]):
            for rid, start, steps in items:
                cur.lane_segments[lane].append(Segment(rid, start, steps))
                cur.lane_useful[lane] += steps
                cur.lane_occupied[lane] += steps
        cur.completions.extend(completions)
        self.current = cur
        if self.log is not None:
            self.log({"ev": "dispatch", "t": t, "batch": batch_id,
                      "budget": budget, "layers": self.L,
                      "lanes": [[[s.request_id, s.start_timestep, s.num_timesteps]
                                 for s in segs] for segs in cur.lane_segments]})
        self._push(layer0_end, _LAYER_DONE, batch_id, 0)
        if joins:
            step0 = self.step_s[0]
            for lane in range(self.lanes_used):
                if cur.lane_occupied[lane] < budget:
                    self._push(swap0_end + cur.lane_occupied[lane] * step0,
                               _LANE_IDLE, batch_id, lane)


def _run_cellular(scenario: Scenario, trace: Trace, accel: AcceleratorModel,
                  log=None, check_invariants=False) -> dict:
    lt = accel.layers
    duration = scenario.sim.duration_s
    warmup_t = duration * scenario.sim.warmup_fraction
    runner = kernels.CellularRunner(
        trace.arrival_time, trace.time_steps,
        scenario.model.num_layers, scenario.policy.cell_granularity,
        scenario.policy.batch_size,
        np.array([x.step_seconds for x in lt]),
        np.array([x.swap_seconds for x in lt]),
        np.array([x.swap_bytes for x in lt], dtype=np.int64),
        np.array([x.slices for x in lt], dtype=np.int64),
        np.array([x.macs_per_step for x in lt], dtype=np.int64),
        np.array([x.weight_bytes for x in lt], dtype=np.int64),
        np.array([x.in_bytes + x.out_bytes for x in lt], dtype=np.int64),
        duration, warmup_t, log=log)
    res = runner.run()

    tally = _Tally()
    tally.dram_weight_bytes = int(res["dram_weight_bytes"])
    tally.dram_act_bytes = int(res["dram_act_bytes"])
    tally.sram_read_bytes = int(res["sram_read_bytes"])
    tally.sram_write_bytes = int(res["sram_write_bytes"])
    tally.mac_useful = int(res["mac_useful"])
    tally.mac_padded = int(res["mac_padded"])
    tally.useful_lane_seconds = res["useful_lane_seconds"]
    tally.padded_lane_seconds = res["padded_lane_seconds"]
    tally.lane_busy_seconds = res["lane_busy_seconds"]
    tally.weight_swaps = int(res["weight_swaps"])
    tally.batches = int(res["dispatches"])
    ids, times = res["completions_id"], res["completions_t"]
    tally.completed_total = len(ids)
    L = scenario.model.num_layers
    for rid, t_end in zip(ids, times):
        if t_end >= warmup_t:
            tally.completed += 1
            tally.latencies.append(float(t_end - trace.arrival_time[rid]))
        if check_invariants:
            expect = int(trace.time_steps[rid]) * L
            if int(res["executed_step_layers"][rid]) != expect:
                tally.violations += 1

    queue = _QueueTracker(warmup_t, duration)
    queue.total = res["queue_integral"]
    queue.quarters = res["queue_quarter_integrals"]
    return {"tally": tally, "queue": queue, "arrived": len(trace),
            "in_flight_at_end": res["in_flight_at_end"]}


def _build_report(scenario: Scenario, trace: Trace, raw: dict) -> MetricsReport:
    tally: _Tally = raw["tally"]
    duration = scenario.sim.duration_s
    warmup_t = duration * scenario.sim.warmup_fraction
    window = duration - warmup_t
    em = scenario.energy

    counts = EnergyCounts(
        dram_bytes=tally.dram_weight_bytes + tally.dram_act_bytes,
        sram_read_bytes=tally.sram_read_bytes,
        sram_write_bytes=tally.sram_write_bytes,
        macs=tally.mac_useful + tally.mac_padded,
        static_seconds=window,
        lane_seconds=tally.lane_busy_seconds,
    )
    base_components = counts.base_components(em)
    base_total = sum(base_components.values())
    energy = em.scale * base_total
    components = {k: em.scale * v for k, v in base_components.items()}

    lat = np.asarray(tally.latencies)
    if len(lat):
        mean_lat = float(lat.mean())
        p50, p95, p99 = (float(x) for x in np.percentile(lat, [50, 95, 99]))
    else:
        mean_lat = p50 = p95 = p99 = 0.0

    lane_seconds_total = scenario.accel.lanes * window
    useful_frac = tally.useful_lane_seconds / lane_seconds_total if window else 0.0
    padded_frac = tally.padded_lane_seconds / lane_seconds_total if window else 0.0
    idle_frac = max(0.0, 1.0 - useful_frac - padded_frac)

    arr = trace.arrival_time
    arrived_in_window = int(np.searchsorted(arr, duration)
                            - np.searchsorted(arr, warmup_t))
    throughput = tally.completed / window if window else 0.0
    queue: _QueueTracker = raw["queue"]
    qspan = window / 4.0
    q2 = queue.quarters[1] / qspan if qspan else 0.0
    q4 = queue.quarters[3] / qspan if qspan else 0.0
    qmean = queue.total / duration if duration else 0.0
    sustainable = (arrived_in_window == 0
                   or (tally.completed / arrived_in_window >= 0.99
                       and q4 <= 2.0 * q2 + 1.0))

    rpj = requests_per_joule(tally.completed, energy) if energy > 0 else 0.0
    return MetricsReport(
        policy=scenario.policy.policy,
        offered_rps=scenario.arrival_rate,
        duration_s=duration,
        warmup_s=warmup_t,
        seed=scenario.sim.seed,
        completed_requests=tally.completed,
        incomplete_requests=raw["in_flight_at_end"],
        throughput_rps=throughput,
        mean_latency_s=mean_lat,
        p50_latency_s=p50,
        p95_latency_s=p95,
        p99_latency_s=p99,
        counts=counts,
        energy_scale=em.scale,
        energy_joules=energy,
        energy_components=components,
        requests_per_joule=rpj,
        useful_frac=useful_frac,
        padded_frac=padded_frac,
        idle_frac=idle_frac,
        mac_useful=tally.mac_useful,
        mac_padded=tally.mac_padded,
        dram_weight_bytes=tally.dram_weight_bytes,
        dram_weight_bytes_per_request=(tally.dram_weight_bytes / tally.completed
                                       if tally.completed else 0.0),
        weight_swaps=tally.weight_swaps,
        batches_dispatched=tally.batches,
        queue_mean=qmean,
        queue_mean_q2=q2,
        queue_mean_q4=q4,
        arrived_in_window=arrived_in_window,
        sustainable=sustainable,
        invariant_violations=tally.violations,
        energy_base_total=base_total,
    )


def run_scenario(scenario: Scenario, trace: Trace | None = None, log=None,
                 check_invariants: bool = False) -> MetricsReport:
    """Simulate one scenario to its horizon and aggregate a MetricsReport.

    With convergence enabled in the sim config, the run is repeated with a
    doubled horizon until the mean-latency 95% half-width falls under the
    configured relative bound (latencies treated as independent samples).
    """
    sim = scenario.sim
    doublings = 0
    while True:
        if trace is None or doublings > 0:
            used_trace = generate_trace(scenario.trace_config())
        else:
            used_trace = trace
        accel = AcceleratorModel(scenario.accel, scenario.model)
        if scenario.policy.policy == "cellular":
            raw = _run_cellular(scenario, used_trace, accel, log, check_invariants)
        else:
            engine = _BatchPolicyEngine(scenario, used_trace, accel, log,
                                        check_invariants)
            raw = engine.run()
        report = _build_report(scenario, used_trace, raw)
        if not sim.convergence_enabled:
            return report
        lat = raw["tally"].latencies
        if len(lat) > 1:
            lat_arr = np.asarray(lat)
            half = 1.96 * lat_arr.std(ddof=1) / math.sqrt(len(lat_arr))
            if (lat_arr.mean() == 0
                    or half / lat_arr.mean() <= sim.convergence_rel_halfwidth
                    or doublings >= sim.convergence_max_doublings):
                return report
        elif doublings >= sim.convergence_max_doublings:
            return report
        doublings += 1
        scenario = replace(scenario,
                           sim=replace(sim, duration_s=sim.duration_s * 2 ** doublings))
        trace = None


def saturation_sweep(scenario: Scenario, load_points, jobs: int = 1):
    """Run independent scenarios over ascending offered loads.

    Returns [(offered_load, MetricsReport)] ordered by load. Each point uses
    the same master seed, so the length sub-stream is shared across loads.
    """
    loads = list(load_points)
    if any(b <= a for a, b in zip(loads, loads[1:])) or any(x <= 0 for x in loads):
        raise ScenarioError("load points must be positive and ascending")
    scenarios = [scenario.with_rate(r) for r in loads]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_scenario, scenarios))
    else:
        reports = [run_scenario(s) for s in scenarios]
    return list(zip(loads, reports))


def max_sustainable_load(sweep_results) -> float:
    """Largest offered load still marked sustainable (0 if none)."""
    best = 0.0
    for load, report in sweep_results:
        if report.sustainable:
            best = max(best, load)
    return best

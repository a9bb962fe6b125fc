"""Pure-Python implementations of the simulator's hot kernels.

Compiled twins live in _ckernels.pyx; rnnbatchsim.kernels picks whichever is
available at import time. Both implementations must stay observably
identical -- tests/test_kernels_parity.py holds them to that.

Kernels:

* lpt_pack: longest-processing-time assignment of request lengths onto
  lanes with an optional early stop once every lane reached the budget cap.
* CellularRunner: the whole cellular-batching simulation loop. Dispatches
  are so fine-grained (a few time-steps of one layer) that driving them
  through the generic event loop dominates runtime, so the loop runs as a
  self-contained kernel over the trace arrays.
"""

from __future__ import annotations

import heapq

import numpy as np

BACKEND = "python"


def lpt_pack(lengths, order, num_lanes, budget_cap):
    """Assign items to lanes in LPT order, min-loaded lane first.

    lengths: int64 array (queue order); order: indices of lengths sorted by
    descending length (ties: ascending index). Items are placed while some
    lane's running total is below budget_cap (cap 0 = no cap, place all).
    Ties in lane total break toward the lower lane index.

    Returns (taken, lane_of[taken], start_in_lane[taken], lane_totals).
    """
    n = len(order)
    lane_of = np.empty(n, dtype=np.int32)
    starts = np.empty(n, dtype=np.int64)
    totals = np.zeros(num_lanes, dtype=np.int64)
    heap = [(0, lane) for lane in range(num_lanes)]
    taken = 0
    for j in range(n):
        total, lane = heap[0]
        if budget_cap > 0 and total >= budget_cap:
            break
        length = int(lengths[order[j]])
        lane_of[j] = lane
        starts[j] = total
        totals[lane] = total + length
        heapq.heapreplace(heap, (total + length, lane))
        taken += 1
    return taken, lane_of[:taken], starts[:taken], totals


class CellularRunner:
    """Cellular batching over a full trace.

    Each request advances through cells in block-major order: block b covers
    time-steps [b*g, b*g + g) and is evaluated for layer 0, then 1, ... L-1
    before block b+1 starts, which pipelines a request through the layers at
    cell granularity. A dispatch picks the oldest waiting request, and up to
    batch_size requests whose next cell sits at the same layer ride along.
    Weights are swapped only when the dispatched layer differs from the one
    resident in the buffer.
    """

    def __init__(self, arrivals, lengths, num_layers, granularity, batch_size,
                 step_seconds, swap_seconds, swap_bytes, slices, macs_per_step,
                 weight_bytes, act_bytes_per_step, duration, warmup_t,
                 log=None):
        self.arrivals = np.asarray(arrivals, dtype=np.float64)
        self.lengths = np.asarray(lengths, dtype=np.int64)
        self.num_layers = int(num_layers)
        self.g = int(granularity)
        self.batch_size = int(batch_size)
        self.step_s = [float(x) for x in step_seconds]
        self.swap_s = [float(x) for x in swap_seconds]
        self.swap_bytes = [int(x) for x in swap_bytes]
        self.slices = [int(x) for x in slices]
        self.macs = [int(x) for x in macs_per_step]
        self.weight_bytes = [int(x) for x in weight_bytes]
        self.act_bytes = [int(x) for x in act_bytes_per_step]
        self.duration = float(duration)
        self.warmup_t = float(warmup_t)
        self.log = log

        n = len(self.arrivals)
        self.block = np.zeros(n, dtype=np.int64)
        self.layer_in_block = np.zeros(n, dtype=np.int64)
        self.executed_step_layers = np.zeros(n, dtype=np.int64)
        # one heap of (arrival, id) per layer position
        self.heaps = [[] for _ in range(self.num_layers)]

        self.completions_id = []
        self.completions_t = []
        # measured-window tallies
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
        self.dispatches = 0
        self.queue_integral = 0.0
        self.queue_quarter_integrals = [0.0, 0.0, 0.0, 0.0]

    def _account_queue(self, t0, t1, in_system):
        if t1 <= t0:
            return
        self.queue_integral += in_system * (t1 - t0)
        # quarter bins over the measured window
        w0, w1 = self.warmup_t, self.duration
        span = (w1 - w0) / 4.0
        if span <= 0:
            return
        lo, hi = max(t0, w0), min(t1, w1)
        while lo < hi:
            q = min(3, int((lo - w0) / span))
            edge = min(hi, w0 + (q + 1) * span)
            self.queue_quarter_integrals[q] += in_system * (edge - lo)
            lo = edge

    def run(self):
        arrivals, lengths = self.arrivals, self.lengths
        n = len(arrivals)
        heaps, g, L = self.heaps, self.g, self.num_layers
        ptr = 0
        t = 0.0
        last_t = 0.0
        in_system = 0
        resident = -1
        while True:
            while ptr < n and arrivals[ptr] <= t:
                heapq.heappush(heaps[0], (arrivals[ptr], ptr))
                in_system += 1
                ptr += 1
            target = -1
            best = None
            for layer in range(L):
                if heaps[layer] and (best is None or heaps[layer][0] < best):
                    best = heaps[layer][0]
                    target = layer
            if target < 0:
                if ptr >= n:
                    break
                self._account_queue(last_t, arrivals[ptr], in_system)
                t = arrivals[ptr]
                last_t = t
                continue
            if t >= self.duration:
                break

            cohort = []
            budget = 0
            for _ in range(min(self.batch_size, len(heaps[target]))):
                _, rid = heapq.heappop(heaps[target])
                seg = min(g, int(lengths[rid]) - int(self.block[rid]) * g)
                cohort.append((rid, seg))
                if seg > budget:
                    budget = seg
            pay_swap = target != resident
            resident = target
            wall = (self.swap_s[target] if pay_swap else 0.0) \
                + budget * self.step_s[target]
            t_end = t + wall
            if t_end > self.duration:
                # horizon: abandon the dispatch, requests stay incomplete
                for rid, _seg in cohort:
                    heapq.heappush(heaps[target], (arrivals[rid], rid))
                break

            counted = t >= self.warmup_t
            if counted:
                self.dispatches += 1
                useful = 0
                for _rid, seg in cohort:
                    useful += seg
                padded = budget * len(cohort) - useful
                if pay_swap:
                    self.dram_weight_bytes += self.swap_bytes[target]
                    self.sram_write_bytes += self.swap_bytes[target]
                    self.weight_swaps += self.slices[target]
                self.dram_act_bytes += self.act_bytes[target] * useful
                self.sram_read_bytes += self.weight_bytes[target] * budget
                self.mac_useful += self.macs[target] * useful
                self.mac_padded += self.macs[target] * padded
                step_s = self.step_s[target]
                swap_s = self.swap_s[target] if pay_swap else 0.0
                self.useful_lane_seconds += useful * step_s
                self.padded_lane_seconds += padded * step_s
                self.lane_busy_seconds += len(cohort) * swap_s + useful * step_s

            if self.log is not None:
                self.log({"ev": "dispatch", "t": t, "layer": target,
                          "parts": [[rid, int(self.block[rid]), seg]
                                    for rid, seg in cohort],
                          "budget": budget, "swap": pay_swap})

            completed_now = []
            for rid, seg in cohort:
                self.executed_step_layers[rid] += seg
                lib = int(self.layer_in_block[rid]) + 1
                if lib == L:
                    self.block[rid] += 1
                    self.layer_in_block[rid] = 0
                    if self.block[rid] * g >= lengths[rid]:
                        completed_now.append(rid)
                        continue
                    heapq.heappush(heaps[0], (arrivals[rid], rid))
                else:
                    self.layer_in_block[rid] = lib
                    heapq.heappush(heaps[lib], (arrivals[rid], rid))
            self._account_queue(last_t, t_end, in_system)
            in_system -= len(completed_now)
            t = t_end
            last_t = t_end
            for rid in completed_now:
                self.completions_id.append(rid)
                self.completions_t.append(t_end)
                if self.log is not None:
                    self.log({"ev": "complete", "t": t_end, "req": rid})

        return self._result(in_system)

    def _result(self, in_system):
        return {
            "completions_id": np.asarray(self.completions_id, dtype=np.int64),
            "completions_t": np.asarray(self.completions_t, dtype=np.float64),
            "executed_step_layers": self.executed_step_layers,
            "in_flight_at_end": in_system,
            "dram_weight_bytes": self.dram_weight_bytes,
            "dram_act_bytes": self.dram_act_bytes,
            "sram_read_bytes": self.sram_read_bytes,
            "sram_write_bytes": self.sram_write_bytes,
            "mac_useful": self.mac_useful,
            "mac_padded": self.mac_padded,
            "useful_lane_seconds": self.useful_lane_seconds,
            "padded_lane_seconds": self.padded_lane_seconds,
            "lane_busy_seconds": self.lane_busy_seconds,
            "weight_swaps": self.weight_swaps,
            "dispatches": self.dispatches,
            "queue_integral": self.queue_integral,
            "queue_quarter_integrals": list(self.queue_quarter_integrals),
        }

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot simulator kernels.

Must stay observably identical to _kernels_py (same tie-breaking, same
floating-point evaluation order); tests/test_kernels_parity.py compares the
two backends on randomized inputs.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND = "cython"


def lpt_pack(lengths, order, int num_lanes, long long budget_cap):
    """LPT assignment; see _kernels_py.lpt_pack for the contract."""
    cdef cnp.int64_t[::1] lens = np.ascontiguousarray(lengths, dtype=np.int64)
    cdef cnp.int64_t[::1] ord_ = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n = ord_.shape[0]
    lane_of_arr = np.empty(n, dtype=np.int32)
    starts_arr = np.empty(n, dtype=np.int64)
    totals_arr = np.zeros(num_lanes, dtype=np.int64)
    cdef cnp.int32_t[::1] lane_of = lane_of_arr
    cdef cnp.int64_t[::1] starts = starts_arr
    cdef cnp.int64_t[::1] totals = totals_arr

    # binary min-heap over (total, lane), lexicographic
    heap_total_arr = np.zeros(num_lanes, dtype=np.int64)
    heap_lane_arr = np.arange(num_lanes, dtype=np.int32)
    cdef cnp.int64_t[::1] ht = heap_total_arr
    cdef cnp.int32_t[::1] hl = heap_lane_arr

    cdef Py_ssize_t taken = 0, j
    cdef long long total, length
    cdef int lane
    for j in range(n):
        total = ht[0]
        lane = hl[0]
        if budget_cap > 0 and total >= budget_cap:
            break
        length = lens[ord_[j]]
        lane_of[j] = lane
        starts[j] = total
        totals[lane] = total + length
        _heap_replace(ht, hl, num_lanes, total + length, lane)
        taken += 1
    return taken, lane_of_arr[:taken], starts_arr[:taken], totals_arr


cdef inline void _heap_replace(cnp.int64_t[::1] ht, cnp.int32_t[::1] hl,
                               int size, long long total, int lane):
    cdef int pos = 0, child
    cdef long long ct
    cdef int cl
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and (ht[child + 1] < ht[child]
                                 or (ht[child + 1] == ht[child]
                                     and hl[child + 1] < hl[child])):
            child += 1
        ct = ht[child]
        cl = hl[child]
        if ct < total or (ct == total and cl < lane):
            ht[pos] = ct
            hl[pos] = cl
            pos = child
        else:
            break
    ht[pos] = total
    hl[pos] = lane


cdef class _ReqHeap:
    """Min-heap of (arrival, request id), smallest arrival then id first."""

    cdef double* keys
    cdef long long* ids
    cdef Py_ssize_t size, capacity

    def __cinit__(self, Py_ssize_t capacity=256):
        self.capacity = capacity
        self.size = 0
        self.keys = <double*> malloc(capacity * sizeof(double))
        self.ids = <long long*> malloc(capacity * sizeof(long long))

    def __dealloc__(self):
        if self.keys != NULL:
            free(self.keys)
        if self.ids != NULL:
            free(self.ids)

    cdef void _grow(self):
        cdef Py_ssize_t cap = self.capacity * 2
        cdef double* nk = <double*> malloc(cap * sizeof(double))
        cdef long long* ni = <long long*> malloc(cap * sizeof(long long))
        cdef Py_ssize_t i
        for i in range(self.size):
            nk[i] = self.keys[i]
            ni[i] = self.ids[i]
        free(self.keys)
        free(self.ids)
        self.keys = nk
        self.ids = ni
        self.capacity = cap

    cdef inline bint less(self, double ka, long long ia, double kb, long long ib):
        return ka < kb or (ka == kb and ia < ib)

    cdef void push(self, double key, long long rid):
        if self.size == self.capacity:
            self._grow()
        cdef Py_ssize_t pos = self.size, parent
        self.size += 1
        while pos > 0:
            parent = (pos - 1) >> 1
            if self.less(key, rid, self.keys[parent], self.ids[parent]):
                self.keys[pos] = self.keys[parent]
                self.ids[pos] = self.ids[parent]
                pos = parent
            else:
                break
        self.keys[pos] = key
        self.ids[pos] = rid

    cdef long long pop(self):
        cdef long long out = self.ids[0]
        self.size -= 1
        cdef double key = self.keys[self.size]
        cdef long long rid = self.ids[self.size]
        cdef Py_ssize_t pos = 0, child
        while True:
            child = 2 * pos + 1
            if child >= self.size:
                break
            if child + 1 < self.size and self.less(self.keys[child + 1],
                                                   self.ids[child + 1],
                                                   self.keys[child],
                                                   self.ids[child]):
                child += 1
            if self.less(self.keys[child], self.ids[child], key, rid):
                self.keys[pos] = self.keys[child]
                self.ids[pos] = self.ids[child]
                pos = child
            else:
                break
        self.keys[pos] = key
        self.ids[pos] = rid
        return out


cdef class CellularRunner:
    """Compiled cellular-batching loop; contract in _kernels_py.CellularRunner."""

    cdef cnp.float64_t[::1] arrivals
    cdef cnp.int64_t[::1] lengths
    cdef int num_layers, g, batch_size
    cdef double duration, warmup_t
    cdef object log
    cdef cnp.float64_t[::1] step_s, swap_s
    cdef cnp.int64_t[::1] swap_bytes, slices, macs, weight_bytes, act_bytes
    cdef cnp.int64_t[::1] block, layer_in_block, executed
    cdef list heaps
    cdef object completions_id, completions_t
    cdef long long dram_weight_bytes, dram_act_bytes, sram_read_bytes
    cdef long long sram_write_bytes, mac_useful, mac_padded, weight_swaps
    cdef long long dispatches
    cdef double useful_lane_seconds, padded_lane_seconds, lane_busy_seconds
    cdef double queue_integral
    cdef double q_quarters[4]

    def __init__(self, arrivals, lengths, num_layers, granularity, batch_size,
                 step_seconds, swap_seconds, swap_bytes, slices, macs_per_step,
                 weight_bytes, act_bytes_per_step, duration, warmup_t,
                 log=None):
        self.arrivals = np.ascontiguousarray(arrivals, dtype=np.float64)
        self.lengths = np.ascontiguousarray(lengths, dtype=np.int64)
        self.num_layers = num_layers
        self.g = granularity
        self.batch_size = batch_size
        self.step_s = np.ascontiguousarray(step_seconds, dtype=np.float64)
        self.swap_s = np.ascontiguousarray(swap_seconds, dtype=np.float64)
        self.swap_bytes = np.ascontiguousarray(swap_bytes, dtype=np.int64)
        self.slices = np.ascontiguousarray(slices, dtype=np.int64)
        self.macs = np.ascontiguousarray(macs_per_step, dtype=np.int64)
        self.weight_bytes = np.ascontiguousarray(weight_bytes, dtype=np.int64)
        self.act_bytes = np.ascontiguousarray(act_bytes_per_step, dtype=np.int64)
        self.duration = duration
        self.warmup_t = warmup_t
        self.log = log
        cdef Py_ssize_t n = self.arrivals.shape[0]
        self.block = np.zeros(n, dtype=np.int64)
        self.layer_in_block = np.zeros(n, dtype=np.int64)
        self.executed = np.zeros(n, dtype=np.int64)
        self.heaps = [_ReqHeap() for _ in range(num_layers)]
        self.completions_id = []
        self.completions_t = []
        self.dram_weight_bytes = self.dram_act_bytes = 0
        self.sram_read_bytes = self.sram_write_bytes = 0
        self.mac_useful = self.mac_padded = 0
        self.weight_swaps = self.dispatches = 0
        self.useful_lane_seconds = 0.0
        self.padded_lane_seconds = 0.0
        self.lane_busy_seconds = 0.0
        self.queue_integral = 0.0
        self.q_quarters[0] = self.q_quarters[1] = 0.0
        self.q_quarters[2] = self.q_quarters[3] = 0.0

    cdef void _account_queue(self, double t0, double t1, long long in_system):
        if t1 <= t0:
            return
        self.queue_integral += in_system * (t1 - t0)
        cdef double span = (self.duration - self.warmup_t) / 4.0
        if span <= 0:
            return
        cdef double lo = t0 if t0 > self.warmup_t else self.warmup_t
        cdef double hi = t1 if t1 < self.duration else self.duration
        cdef double edge
        cdef int q
        while lo < hi:
            q = <int> ((lo - self.warmup_t) / span)
            if q > 3:
                q = 3
            edge = self.warmup_t + (q + 1) * span
            if edge > hi:
                edge = hi
            self.q_quarters[q] += in_system * (edge - lo)
            lo = edge

    def run(self):
        cdef Py_ssize_t n = self.arrivals.shape[0]
        cdef Py_ssize_t ptr = 0
        cdef double t = 0.0, last_t = 0.0, wall, t_end, step_s, swap_s
        cdef long long in_system = 0
        cdef int resident = -1, target, layer, L = self.num_layers
        cdef int g = self.g
        cdef long long rid, seg, budget, useful, padded, lib
        cdef Py_ssize_t k, csize
        cdef bint pay_swap, counted
        cdef _ReqHeap heap
        cdef long long[512] cohort_id
        cdef long long[512] cohort_seg
        if self.batch_size > 512:
            raise ValueError("cellular kernel supports batch_size <= 512")

        while True:
            while ptr < n and self.arrivals[ptr] <= t:
                (<_ReqHeap> self.heaps[0]).push(self.arrivals[ptr], ptr)
                in_system += 1
                ptr += 1
            target = -1
            for layer in range(L):
                heap = <_ReqHeap> self.heaps[layer]
                if heap.size > 0:
                    if target < 0 or heap.keys[0] < (<_ReqHeap> self.heaps[target]).keys[0] \
                       or (heap.keys[0] == (<_ReqHeap> self.heaps[target]).keys[0]
                           and heap.ids[0] < (<_ReqHeap> self.heaps[target]).ids[0]):
                        target = layer
            if target < 0:
                if ptr >= n:
                    break
                self._account_queue(last_t, self.arrivals[ptr], in_system)
                t = self.arrivals[ptr]
                last_t = t
                continue
            if t >= self.duration:
                break

            heap = <_ReqHeap> self.heaps[target]
            csize = self.batch_size if heap.size > self.batch_size else heap.size
            budget = 0
            for k in range(csize):
                rid = heap.pop()
                seg = self.lengths[rid] - self.block[rid] * g
                if seg > g:
                    seg = g
                cohort_id[k] = rid
                cohort_seg[k] = seg
                if seg > budget:
                    budget = seg
            pay_swap = target != resident
            resident = target
            wall = (self.swap_s[target] if pay_swap else 0.0) \
                + budget * self.step_s[target]
            t_end = t + wall
            if t_end > self.duration:
                for k in range(csize):
                    heap.push(self.arrivals[cohort_id[k]], cohort_id[k])
                break

            counted = t >= self.warmup_t
            if counted:
                self.dispatches += 1
                useful = 0
                for k in range(csize):
                    useful += cohort_seg[k]
                padded = budget * csize - useful
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
                self.lane_busy_seconds += csize * swap_s + useful * step_s

            if self.log is not None:
                self.log({"ev": "dispatch", "t": t, "layer": target,
                          "parts": [[int(cohort_id[k]), int(self.block[cohort_id[k]]),
                                     int(cohort_seg[k])] for k in range(csize)],
                          "budget": int(budget), "swap": bool(pay_swap)})

            self._account_queue(last_t, t_end, in_system)
            for k in range(csize):
                rid = cohort_id[k]
                self.executed[rid] += cohort_seg[k]
                lib = self.layer_in_block[rid] + 1
                if lib == L:
                    self.block[rid] += 1
                    self.layer_in_block[rid] = 0
                    if self.block[rid] * g >= self.lengths[rid]:
                        in_system -= 1
                        self.completions_id.append(rid)
                        self.completions_t.append(t_end)
                        if self.log is not None:
                            self.log({"ev": "complete", "t": t_end,
                                      "req": int(rid)})
                        continue
                    (<_ReqHeap> self.heaps[0]).push(self.arrivals[rid], rid)
                else:
                    self.layer_in_block[rid] = lib
                    (<_ReqHeap> self.heaps[lib]).push(self.arrivals[rid], rid)
            t = t_end
            last_t = t_end

        return {
            "completions_id": np.asarray(self.completions_id, dtype=np.int64),
            "completions_t": np.asarray(self.completions_t, dtype=np.float64),
            "executed_step_layers": np.asarray(self.executed),
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
            "queue_quarter_integrals": [self.q_quarters[0], self.q_quarters[1],
                                        self.q_quarters[2], self.q_quarters[3]],
        }

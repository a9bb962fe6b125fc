"""Timing and traffic models for the two accelerator backends.

Both backends share the same structure: a batch-layer execution fetches the
layer weights from DRAM into the on-chip buffer (the weight swap), then all
processing lanes advance in lockstep for `lane_budget` time-steps, one
recurrent-cell evaluation per lane per time-step. Weights are broadcast, so
DRAM weight traffic per batch-layer is independent of how many lanes are
active, while every evaluated time-step streams one full pass of the layer
weights out of the on-chip buffer.

Backend differences are confined to the per-time-step cycle count:

* multi-lane engine ("epur"): four compute units evaluate the gates in
  parallel, each lane owns a dot-product unit of `dpu_width` MACs/cycle, so
  a time-step costs ceil(H*(I+H)/dpu_width) cycles plus a fixed pipeline
  drain.
* systolic array ("tpu"): output-stationary mapping, one sequence per row;
  the G*H output neurons fold over the columns, each fold streaming the
  (I+H)-long weight column, so a time-step costs ceil(G*H/cols)*(I+H)
  cycles plus the drain.

When a layer's per-CU gate matrix exceeds the weight buffer, the layer runs
in buffer-sized slices and the swap traffic multiplies by the slice count.
Intermediate activations between layers always round-trip main memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .rnn import RnnModel, layer_cost

MIB = 1 << 20


class ConfigError(ValueError):
    """Invalid accelerator configuration."""


@dataclass(frozen=True)
class EPurConfig:
    num_lanes: int = 64
    dpu_width: int = 64
    num_compute_units: int = 4
    frequency_hz: float = 500e6
    weight_buffer_bytes: int = 2 * MIB  # per compute unit
    dram_bandwidth_bytes_per_sec: float = 25.6e9
    pipeline_latency_cycles: int = 10
    overlap_weight_fetch: bool = False

    def __post_init__(self):
        if min(self.num_lanes, self.dpu_width, self.weight_buffer_bytes) < 1:
            raise ConfigError("num_lanes, dpu_width and weight_buffer_bytes must be positive")
        if self.num_compute_units != 4:
            raise ConfigError("num_compute_units must be 4 (one per LSTM gate)")
        if self.frequency_hz <= 0 or self.dram_bandwidth_bytes_per_sec <= 0:
            raise ConfigError("frequency and DRAM bandwidth must be positive")
        if self.pipeline_latency_cycles < 0:
            raise ConfigError("pipeline_latency_cycles must be >= 0")

    @property
    def lanes(self) -> int:
        return self.num_lanes


@dataclass(frozen=True)
class TpuConfig:
    rows: int = 128
    cols: int = 128
    frequency_hz: float = 700e6
    sram_bytes: int = 24 * MIB
    dram_bandwidth_bytes_per_sec: float = 25.6e9
    pipeline_latency_cycles: int = 10
    overlap_weight_fetch: bool = False

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.sram_bytes < 1:
            raise ConfigError("rows, cols and sram_bytes must be positive")
        if self.frequency_hz <= 0 or self.dram_bandwidth_bytes_per_sec <= 0:
            raise ConfigError("frequency and DRAM bandwidth must be positive")
        if self.pipeline_latency_cycles < 0:
            raise ConfigError("pipeline_latency_cycles must be >= 0")

    @property
    def lanes(self) -> int:
        return self.rows


AccelConfig = EPurConfig | TpuConfig


def timestep_cycles_epur(cfg: EPurConfig, model: RnnModel, layer_index: int) -> int:
    """Cycles one lane needs for one time-step; gates run in parallel on the CUs."""
    i_eff = model.layer_input_size(layer_index)
    h = model.cell_size
    return math.ceil(h * (i_eff + h) / cfg.dpu_width) + cfg.pipeline_latency_cycles


def timestep_cycles_tpu(cfg: TpuConfig, model: RnnModel, layer_index: int) -> int:
    """Cycles per time-step with all rows advancing in lockstep."""
    i_eff = model.layer_input_size(layer_index)
    folds = math.ceil(model.gates * model.cell_size / cfg.cols)
    return folds * (i_eff + model.cell_size) + cfg.pipeline_latency_cycles


def timestep_cycles(cfg: AccelConfig, model: RnnModel, layer_index: int) -> int:
    if isinstance(cfg, EPurConfig):
        return timestep_cycles_epur(cfg, model, layer_index)
    return timestep_cycles_tpu(cfg, model, layer_index)


def slice_factor(cfg: AccelConfig, model: RnnModel, layer_index: int) -> int:
    """How many buffer-sized slices a layer swap needs (1 = fits resident)."""
    cost = layer_cost(model, layer_index)
    if isinstance(cfg, EPurConfig):
        # The weight buffer is per CU and each CU holds one gate's matrices.
        per_gate = cost.weight_bytes // model.gates
        return max(1, math.ceil(per_gate / cfg.weight_buffer_bytes))
    return max(1, math.ceil((cost.weight_bytes + cost.bias_bytes) / cfg.sram_bytes))


def layer_swap(cfg: AccelConfig, model: RnnModel, layer_index: int) -> tuple[int, int]:
    """(cycles, dram_bytes) to bring one layer's weights on chip.

    Slided layers re-stream each slice once per time-step pass, multiplying
    the weight traffic by the slice count; biases are fetched once.
    """
    cost = layer_cost(model, layer_index)
    k = slice_factor(cfg, model, layer_index)
    dram_bytes = k * cost.weight_bytes + cost.bias_bytes
    seconds = dram_bytes / cfg.dram_bandwidth_bytes_per_sec
    return math.ceil(seconds * cfg.frequency_hz), dram_bytes


@dataclass(frozen=True)
class LaneStats:
    lane_id: int
    useful_timesteps: int
    padded_timesteps: int
    idle_from_cycle: int | None  # None when the lane is busy to the end


@dataclass(frozen=True)
class BatchExecutionStats:
    layer_index: int
    wall_cycles: int
    dram_weight_bytes: int
    dram_activation_bytes: int
    sram_weight_reads_bytes: int
    mac_count_useful: int
    mac_count_padded: int
    per_lane: tuple[LaneStats, ...]
    swap_cycles: int
    step_cycles: int
    weight_swaps: int  # buffer fills (slice count), 0 if weights were resident

    @property
    def lane_busy_cycles(self) -> int:
        """Powered lane-cycles: swap wait plus useful compute, per active lane."""
        return sum(self.swap_cycles + s.useful_timesteps * self.step_cycles
                   for s in self.per_lane)


class LayerTimings:
    """Per-layer constants for one (accelerator config, model) pair."""

    __slots__ = ("step_cycles", "step_seconds", "swap_cycles", "swap_seconds",
                 "swap_bytes", "slices", "macs_per_step", "weight_bytes",
                 "out_bytes", "in_bytes")

    def __init__(self, cfg: AccelConfig, model: RnnModel, layer_index: int):
        cost = layer_cost(model, layer_index)
        self.step_cycles = timestep_cycles(cfg, model, layer_index)
        self.step_seconds = self.step_cycles / cfg.frequency_hz
        self.swap_cycles, self.swap_bytes = layer_swap(cfg, model, layer_index)
        self.swap_seconds = self.swap_cycles / cfg.frequency_hz
        self.slices = slice_factor(cfg, model, layer_index)
        self.macs_per_step = cost.macs_per_timestep
        self.weight_bytes = cost.weight_bytes
        self.out_bytes = cost.output_bytes_per_timestep
        self.in_bytes = (model.layer_input_size(layer_index)
                         * model.bytes_per_activation)


class AcceleratorModel:
    """Deterministic pure timing/traffic function for a fixed config + model."""

    def __init__(self, cfg: AccelConfig, model: RnnModel):
        self.cfg = cfg
        self.model = model
        self.lanes = cfg.lanes
        self.frequency_hz = cfg.frequency_hz
        self.layers = [LayerTimings(cfg, model, i) for i in range(model.num_layers)]

    def batch_layer_stats(self, layer_index: int, lane_useful: list[tuple[int, int]],
                          budget: int, pay_swap: bool = True) -> BatchExecutionStats:
        """Account one batch-layer execution.

        lane_useful holds (lane_id, useful_timesteps) for the active lanes;
        each active lane is budgeted `budget` time-steps, the shortfall is
        padded computation. pay_swap=False models weights already resident.
        """
        lt = self.layers[layer_index]
        swap_cycles = lt.swap_cycles if pay_swap else 0
        compute = budget * lt.step_cycles
        if self.cfg.overlap_weight_fetch:
            wall = max(swap_cycles, compute)
        else:
            wall = swap_cycles + compute
        useful_total = 0
        per_lane = []
        for lane_id, useful in lane_useful:
            if lane_id >= self.lanes:
                raise ConfigError(f"plan references lane {lane_id} >= {self.lanes}")
            if useful > budget:
                raise ValueError("lane useful time-steps exceed the lane budget")
            useful_total += useful
            idle_from = swap_cycles + useful * lt.step_cycles if useful < budget else None
            per_lane.append(LaneStats(lane_id, useful, budget - useful, idle_from))
        padded_total = budget * len(per_lane) - useful_total
        act_bytes = (lt.in_bytes + lt.out_bytes) * useful_total
        return BatchExecutionStats(
            layer_index=layer_index,
            wall_cycles=wall,
            dram_weight_bytes=lt.swap_bytes if pay_swap else 0,
            dram_activation_bytes=act_bytes,
            sram_weight_reads_bytes=lt.weight_bytes * budget,
            mac_count_useful=lt.macs_per_step * useful_total,
            mac_count_padded=lt.macs_per_step * padded_total,
            per_lane=tuple(per_lane),
            swap_cycles=swap_cycles,
            step_cycles=lt.step_cycles,
            weight_swaps=lt.slices if pay_swap else 0,
        )


def execute_batch_layer(cfg: AccelConfig, model: RnnModel, layer_index: int,
                        plan) -> BatchExecutionStats:
    """Run one layer of a BatchPlan through the accelerator model."""
    accel = AcceleratorModel(cfg, model)
    lane_useful = [(lane, sum(seg.num_timesteps for seg in segs))
                   for lane, segs in enumerate(plan.lane_segments) if segs]
    return accel.batch_layer_stats(layer_index, lane_useful, plan.lane_budget)

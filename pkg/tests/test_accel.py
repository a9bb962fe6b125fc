"""Accelerator timing/traffic model against arithmetic oracles."""

import math

import pytest
from hypothesis import given, strategies as st

from rnnbatchsim.accel import (AcceleratorModel, ConfigError, EPurConfig,
                               TpuConfig, execute_batch_layer, layer_swap,
                               slice_factor, timestep_cycles_epur,
                               timestep_cycles_tpu)
from rnnbatchsim.rnn import DEEPSPEECH2, MNMT, RnnModel
from rnnbatchsim.sched import BatchPlan, Segment

BIG_BUFFER = EPurConfig(weight_buffer_bytes=1 << 30)


def lstm(h, i, layers=1):
    return RnnModel(name="t", cell_type="lstm", num_layers=layers,
                    cell_size=h, input_size=i)


class TestTimestepCycles:
    def test_epur_mnmt(self):
        cfg = EPurConfig(pipeline_latency_cycles=10)
        assert timestep_cycles_epur(cfg, MNMT, 0) == math.ceil(1024 * 2048 / 64) + 10
        assert timestep_cycles_epur(cfg, MNMT, 0) == 32768 + 10

    def test_epur_small(self):
        cfg = EPurConfig(dpu_width=64, pipeline_latency_cycles=3)
        assert timestep_cycles_epur(cfg, lstm(64, 64), 0) == 128 + 3

    def test_epur_single_pass(self):
        cfg = EPurConfig(dpu_width=1 << 20, pipeline_latency_cycles=5)
        assert timestep_cycles_epur(cfg, lstm(16, 16), 0) == 1 + 5

    def test_tpu_mnmt(self):
        cfg = TpuConfig(pipeline_latency_cycles=10)
        assert timestep_cycles_tpu(cfg, MNMT, 1) == \
            math.ceil(4 * 1024 / 128) * 2048 + 10 == 65536 + 10

    def test_tpu_single_fold(self):
        cfg = TpuConfig(cols=256, pipeline_latency_cycles=0)
        m = lstm(64, 32)  # G*H = 256 <= cols
        assert timestep_cycles_tpu(cfg, m, 0) == (32 + 64)

    def test_tpu_deepspeech(self):
        cfg = TpuConfig(pipeline_latency_cycles=10)
        # GRU: 3 * 800 = 2400 neurons over 128 columns -> 19 folds of 1600
        assert timestep_cycles_tpu(cfg, DEEPSPEECH2, 1) == 19 * 1600 + 10


class TestLayerSwap:
    def test_mnmt_swap_unsliced(self):
        # big buffer: one slice; 16 MiB + biases at 25.6 GB/s and 500 MHz
        cycles, dram = layer_swap(BIG_BUFFER, MNMT, 0)
        assert dram == 16_777_216 + 8192
        assert cycles == math.ceil(dram / 25.6e9 * 500e6)

    def test_mnmt_swap_sliced_default_buffer(self):
        # per-gate matrix 4 MiB vs 2 MiB buffer -> factor 2
        cfg = EPurConfig()
        assert slice_factor(cfg, MNMT, 0) == 2
        cycles, dram = layer_swap(cfg, MNMT, 0)
        assert dram == 2 * 16_777_216 + 8192

    def test_deepspeech_sliced(self):
        cfg = EPurConfig()
        # gate matrix 1600*800*2 = 2.56e6 B > 2 MiB
        assert slice_factor(cfg, DEEPSPEECH2, 0) == 2

    def test_tpu_fits(self):
        cfg = TpuConfig()
        assert slice_factor(cfg, MNMT, 0) == 1
        assert slice_factor(cfg, DEEPSPEECH2, 0) == 1

    def test_zero_bandwidth_rejected(self):
        with pytest.raises(ConfigError):
            EPurConfig(dram_bandwidth_bytes_per_sec=0.0)
        with pytest.raises(ConfigError):
            TpuConfig(dram_bandwidth_bytes_per_sec=-1.0)

    def test_gate_units_pinned_to_four(self):
        # one compute unit per gate; the timing formula assumes exactly four
        with pytest.raises(ConfigError):
            EPurConfig(num_compute_units=2)


def plan_for(lane_lengths, budget, layers=1):
    segs = [[Segment(i, 0, n)] if n else [] for i, n in enumerate(lane_lengths)]
    return BatchPlan(0, segs, budget, layers)


class TestExecuteBatchLayer:
    def test_single_lane_no_padding(self):
        cfg = BIG_BUFFER
        stats = execute_batch_layer(cfg, MNMT, 0, plan_for([5], 5))
        swap_cycles, _ = layer_swap(cfg, MNMT, 0)
        step = timestep_cycles_epur(cfg, MNMT, 0)
        assert stats.wall_cycles == swap_cycles + 5 * step
        assert stats.mac_count_padded == 0

    def test_padded_fraction_1234(self):
        # lanes with 1,2,3,4 useful steps, budget 4: 6 of 16 step-slots padded
        stats = execute_batch_layer(BIG_BUFFER, lstm(8, 8), 0,
                                    plan_for([1, 2, 3, 4], 4))
        total = stats.mac_count_useful + stats.mac_count_padded
        assert stats.mac_count_padded / total == pytest.approx(6 / 16)

    def test_partition_example_padding(self):
        # lane totals (17, 13) under budget 17: lane 1 pads 4 time-steps
        plan = BatchPlan(0, [[Segment(0, 0, 8), Segment(1, 0, 5), Segment(2, 0, 4)],
                             [Segment(3, 0, 7), Segment(4, 0, 6)]], 17, 1)
        stats = execute_batch_layer(BIG_BUFFER, lstm(8, 8), 0, plan)
        per_lane = {s.lane_id: s for s in stats.per_lane}
        assert per_lane[0].padded_timesteps == 0
        assert per_lane[1].padded_timesteps == 4

    def test_activation_traffic(self):
        m = lstm(8, 4, layers=2)
        s0 = execute_batch_layer(BIG_BUFFER, m, 0, plan_for([3, 3], 3))
        s1 = execute_batch_layer(BIG_BUFFER, m, 1, plan_for([3, 3], 3))
        # layer 0 reads input frames (4*2 B), writes h (8*2 B)
        assert s0.dram_activation_bytes == (4 * 2 + 8 * 2) * 6
        # deeper layers read the previous layer's h and write their own
        assert s1.dram_activation_bytes == 2 * (8 * 2) * 6

    def test_sram_reads_broadcast(self):
        # one full weight pass per budgeted step, independent of lane count
        m = lstm(16, 16)
        one = execute_batch_layer(BIG_BUFFER, m, 0, plan_for([4], 4))
        many = execute_batch_layer(BIG_BUFFER, m, 0, plan_for([4, 4, 4, 4], 4))
        assert one.sram_weight_reads_bytes == many.sram_weight_reads_bytes
        assert one.dram_weight_bytes == many.dram_weight_bytes

    def test_idle_from_cycle(self):
        cfg = BIG_BUFFER
        m = lstm(8, 8)
        stats = execute_batch_layer(cfg, m, 0, plan_for([2, 4], 4))
        swap_cycles, _ = layer_swap(cfg, m, 0)
        step = timestep_cycles_epur(cfg, m, 0)
        lanes = {s.lane_id: s for s in stats.per_lane}
        assert lanes[0].idle_from_cycle == swap_cycles + 2 * step
        assert lanes[1].idle_from_cycle is None

    def test_lane_out_of_range(self):
        cfg = EPurConfig(num_lanes=2)
        plan = BatchPlan(0, [[], [], [Segment(0, 0, 1)]], 1, 1)
        with pytest.raises(ConfigError):
            execute_batch_layer(cfg, lstm(8, 8), 0, plan)

    def test_overlap_flag(self):
        cfg = EPurConfig(overlap_weight_fetch=True, weight_buffer_bytes=1 << 30)
        stats = execute_batch_layer(cfg, MNMT, 0, plan_for([1000], 1000))
        swap_cycles, _ = layer_swap(cfg, MNMT, 0)
        step = timestep_cycles_epur(cfg, MNMT, 0)
        assert stats.wall_cycles == max(swap_cycles, 1000 * step)

    @given(st.lists(st.integers(0, 30), min_size=1, max_size=16),
           st.integers(0, 10))
    def test_conservation(self, useful, extra):
        budget = max(useful) + extra if max(useful) else extra + 1
        plan = plan_for(useful, budget)
        stats = execute_batch_layer(BIG_BUFFER, lstm(4, 4), 0, plan)
        active = sum(1 for u in useful if u)
        macs = 4 * 8 * 4
        assert stats.mac_count_useful + stats.mac_count_padded == \
            macs * active * budget

    def test_backend_work_agreement(self):
        # useful MAC count is a model property, not a backend property
        plan = plan_for([3, 5, 0, 7], 7)
        epur = execute_batch_layer(BIG_BUFFER, MNMT, 0, plan)
        tpu = execute_batch_layer(TpuConfig(), MNMT, 0, plan)
        assert epur.mac_count_useful == tpu.mac_count_useful
        assert epur.mac_count_padded == tpu.mac_count_padded

    def test_wall_cycles_monotone_in_budget(self):
        cfg = BIG_BUFFER
        m = lstm(32, 32)
        walls = [execute_batch_layer(cfg, m, 0, plan_for([b], b)).wall_cycles
                 for b in (1, 2, 5, 9)]
        assert walls == sorted(walls)

"""Energy model: arithmetic oracles, additivity, scale behavior."""

import pytest

from rnnbatchsim.accel import (AcceleratorModel, EPurConfig,
                               execute_batch_layer)
from rnnbatchsim.energy import (EnergyCounts, EnergyModel, batch_energy,
                                requests_per_joule)
from rnnbatchsim.rnn import MNMT
from rnnbatchsim.sched import BatchPlan, Segment

ZERO = EnergyModel(0, 0, 0, 0, 0, 0)


def plan_for(lane_lengths, budget):
    segs = [[Segment(i, 0, n)] if n else [] for i, n in enumerate(lane_lengths)]
    return BatchPlan(0, segs, budget, 1)


def test_zero_model_zero_energy():
    stats = execute_batch_layer(EPurConfig(), MNMT, 0, plan_for([4, 4], 4))
    assert batch_energy(stats, ZERO, 500e6) == 0.0


def test_single_term_dram():
    counts = EnergyCounts(dram_bytes=10**9)
    em = EnergyModel(20.0, 0, 0, 0, 0, 0)
    assert counts.total_joules(em) == pytest.approx(0.02)


def test_additivity_over_disjoint_executions():
    # summing two batch-layer energies equals the energy of merged tallies
    em = EnergyModel()
    cfg = EPurConfig()
    a = execute_batch_layer(cfg, MNMT, 0, plan_for([4, 4], 4))
    b = execute_batch_layer(cfg, MNMT, 1, plan_for([9], 9))
    merged = EnergyCounts(
        dram_bytes=sum(s.dram_weight_bytes + s.dram_activation_bytes for s in (a, b)),
        sram_read_bytes=a.sram_weight_reads_bytes + b.sram_weight_reads_bytes,
        sram_write_bytes=a.dram_weight_bytes + b.dram_weight_bytes,
        macs=sum(s.mac_count_useful + s.mac_count_padded for s in (a, b)),
        static_seconds=(a.wall_cycles + b.wall_cycles) / cfg.frequency_hz,
        lane_seconds=(a.lane_busy_cycles + b.lane_busy_cycles) / cfg.frequency_hz,
    )
    separate = batch_energy(a, em, cfg.frequency_hz) + batch_energy(b, em, cfg.frequency_hz)
    assert merged.total_joules(em) == pytest.approx(separate)
    assert separate > 0


def test_batching_amortizes_weight_fetch_by_10x():
    """64 sequences in one batch vs 64 single-sequence batches.

    The full-model weight fetch dominates a single-sequence evaluation, so
    per-request energy must drop more than tenfold when 64 sequences share
    each fetch (direction forced by broadcast weight reuse).
    """
    em = EnergyModel()
    cfg = EPurConfig()
    accel = AcceleratorModel(cfg, MNMT)
    length = 62

    def model_pass(lane_lengths, budget):
        joules = 0.0
        for layer in range(MNMT.num_layers):
            lane_useful = [(i, n) for i, n in enumerate(lane_lengths)]
            stats = accel.batch_layer_stats(layer, lane_useful, budget)
            joules += batch_energy(stats, em, cfg.frequency_hz)
        return joules

    batched_per_req = model_pass([length] * 64, length) / 64
    single_per_req = model_pass([length], length)
    assert single_per_req / batched_per_req > 10


def test_weight_fetch_dominates_dynamic_energy_single_request():
    # single-sequence batch: DRAM weight traffic >= 50% of dynamic energy
    em = EnergyModel()
    cfg = EPurConfig()
    accel = AcceleratorModel(cfg, MNMT)
    dram_w = sram_r = sram_w = macs = act = 0
    for layer in range(MNMT.num_layers):
        stats = accel.batch_layer_stats(layer, [(0, 62)], 62)
        dram_w += stats.dram_weight_bytes
        act += stats.dram_activation_bytes
        sram_r += stats.sram_weight_reads_bytes
        sram_w += stats.dram_weight_bytes
        macs += stats.mac_count_useful + stats.mac_count_padded
    pj = 1e-12
    dram_weight_j = dram_w * em.dram_pj_per_byte * pj
    dynamic = ((dram_w + act) * em.dram_pj_per_byte
               + sram_r * em.sram_read_pj_per_byte
               + sram_w * em.sram_write_pj_per_byte + macs * em.mac_pj) * pj
    assert dram_weight_j / dynamic >= 0.5


def test_scaled_is_exact():
    counts = EnergyCounts(dram_bytes=123456789, sram_read_bytes=987654,
                          sram_write_bytes=55555, macs=10**10,
                          static_seconds=17.0, lane_seconds=3.5)
    em = EnergyModel()
    base = counts.total_joules(em)
    assert counts.total_joules(em.scaled(3.7)) == 3.7 * base


def test_power_gated_lane_static():
    # lane static energy follows useful time, not the padded budget
    em = EnergyModel(0, 0, 0, 0, 0, lane_static_watts=1.0)
    cfg = EPurConfig(weight_buffer_bytes=1 << 30, pipeline_latency_cycles=0)
    accel = AcceleratorModel(cfg, MNMT)
    step_s = accel.layers[0].step_seconds
    swap_s = accel.layers[0].swap_seconds
    stats = accel.batch_layer_stats(0, [(0, 2), (1, 10)], 10)
    expect = 2 * swap_s + (2 + 10) * step_s
    assert batch_energy(stats, em, cfg.frequency_hz) == pytest.approx(expect)


def test_requests_per_joule():
    assert requests_per_joule(100, 50.0) == 2.0
    assert requests_per_joule(0, 5.0) == 0.0
    with pytest.raises(ValueError):
        requests_per_joule(10, 0.0)


def test_negative_constants_rejected():
    with pytest.raises(ValueError):
        EnergyModel(dram_pj_per_byte=-1.0)

"""Compiled and pure-Python kernels must be observably identical."""

import random

import numpy as np
import pytest

from rnnbatchsim import _kernels_py

try:
    from rnnbatchsim import _ckernels
except ImportError:
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None,
                               reason="compiled kernels not built")


@needs_ext
@pytest.mark.parametrize("seed", range(8))
def test_lpt_pack_parity(seed):
    rnd = random.Random(seed)
    n = rnd.randint(0, 400)
    lengths = np.array([rnd.randint(1, 500) for _ in range(n)], dtype=np.int64)
    order = np.argsort(-lengths, kind="stable").astype(np.int64)
    lanes = rnd.randint(1, 64)
    cap = rnd.choice([0, rnd.randint(1, 800)])
    a = _kernels_py.lpt_pack(lengths, order, lanes, cap)
    b = _ckernels.lpt_pack(lengths, order, lanes, cap)
    assert a[0] == b[0]
    assert np.array_equal(a[1], b[1])
    assert np.array_equal(a[2], b[2])
    assert np.array_equal(a[3], b[3])


def _runner_args(seed, n_req=400):
    rnd = np.random.default_rng(seed)
    arrivals = np.sort(rnd.uniform(0, 20.0, n_req))
    lengths = rnd.integers(1, 60, n_req).astype(np.int64)
    layers = int(rnd.integers(1, 4))
    step_s = rnd.uniform(1e-4, 5e-4, layers)
    swap_s = rnd.uniform(1e-4, 2e-3, layers)
    return dict(
        arrivals=arrivals, lengths=lengths, num_layers=layers,
        granularity=int(rnd.integers(1, 6)), batch_size=int(rnd.integers(1, 32)),
        step_seconds=step_s, swap_seconds=swap_s,
        swap_bytes=rnd.integers(10**5, 10**7, layers).astype(np.int64),
        slices=rnd.integers(1, 3, layers).astype(np.int64),
        macs_per_step=rnd.integers(10**5, 10**7, layers).astype(np.int64),
        weight_bytes=rnd.integers(10**5, 10**7, layers).astype(np.int64),
        act_bytes_per_step=rnd.integers(100, 5000, layers).astype(np.int64),
        duration=25.0, warmup_t=2.5)


@needs_ext
@pytest.mark.parametrize("seed", range(6))
def test_cellular_runner_parity(seed):
    args = _runner_args(seed)
    log_a, log_b = [], []
    res_a = _kernels_py.CellularRunner(**args, log=log_a.append).run()
    res_b = _ckernels.CellularRunner(**args, log=log_b.append).run()
    assert log_a == log_b
    for key in res_a:
        a, b = res_a[key], res_b[key]
        if isinstance(a, np.ndarray):
            assert np.array_equal(a, b), key
        else:
            assert a == pytest.approx(b, rel=0, abs=0), key


@needs_ext
def test_full_scenario_parity(monkeypatch):
    """A whole cellular scenario must not depend on the backend."""
    import dataclasses

    from rnnbatchsim import kernels
    from rnnbatchsim.accel import EPurConfig
    from rnnbatchsim.rnn import RnnModel
    from rnnbatchsim.sched import PolicyConfig
    from rnnbatchsim.sim import Scenario, SimConfig, run_scenario
    from rnnbatchsim.workload import LengthDistribution

    model = RnnModel(name="p", cell_type="gru", num_layers=3, cell_size=64,
                     input_size=64)
    sc = Scenario(model=model,
                  accel=EPurConfig(num_lanes=8, frequency_hz=1e6,
                                   dram_bandwidth_bytes_per_sec=1e9),
                  policy=PolicyConfig(policy="cellular", batch_size=8,
                                      cell_granularity=2),
                  arrival_rate=60.0,
                  length_distribution=LengthDistribution.uniform(2, 50),
                  sim=SimConfig(duration_s=40.0, seed=13))
    monkeypatch.setattr(kernels, "CellularRunner", _kernels_py.CellularRunner)
    pure = run_scenario(sc)
    monkeypatch.setattr(kernels, "CellularRunner", _ckernels.CellularRunner)
    compiled = run_scenario(sc)
    assert pure == compiled

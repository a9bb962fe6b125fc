"""Benchmark: compiled Cython kernels vs the pure-Python fallback.

Times the two hot kernels in isolation (LPT lane packing, the cellular
dispatch loop) and a full cellular scenario through the public API with each
backend. Run from the repo root:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from rnnbatchsim import _kernels_py

try:
    from rnnbatchsim import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = {"python": _kernels_py}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels


def timeit(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lpt_pack():
    rng = np.random.default_rng(0)
    lengths = rng.integers(1, 120, 200_000).astype(np.int64)
    order = np.argsort(-lengths, kind="stable").astype(np.int64)
    rows = {}
    for name, mod in BACKENDS.items():
        rows[name] = timeit(lambda m=mod: m.lpt_pack(lengths, order, 64, 512))
    return "lpt_pack (200k queued, 64 lanes, cap 512)", rows


def bench_cellular_kernel():
    rng = np.random.default_rng(1)
    n = 30_000
    arrivals = np.sort(rng.uniform(0, 300.0, n))
    lengths = rng.integers(5, 120, n).astype(np.int64)
    layers = 8
    args = dict(
        arrivals=arrivals, lengths=lengths, num_layers=layers, granularity=1,
        batch_size=64,
        step_seconds=np.full(layers, 6.56e-5),
        swap_seconds=np.full(layers, 1.31e-3),
        swap_bytes=np.full(layers, 33_562_624, dtype=np.int64),
        slices=np.full(layers, 2, dtype=np.int64),
        macs_per_step=np.full(layers, 8_388_608, dtype=np.int64),
        weight_bytes=np.full(layers, 16_777_216, dtype=np.int64),
        act_bytes_per_step=np.full(layers, 4096, dtype=np.int64),
        duration=300.0, warmup_t=30.0)
    rows = {}
    for name, mod in BACKENDS.items():
        rows[name] = timeit(lambda m=mod: m.CellularRunner(**args).run(), repeat=3)
    return "cellular loop (30k requests, 8 layers, cell=1)", rows


def bench_full_scenario():
    import dataclasses

    from rnnbatchsim import kernels
    from rnnbatchsim.accel import EPurConfig
    from rnnbatchsim.rnn import MNMT
    from rnnbatchsim.sched import PolicyConfig
    from rnnbatchsim.sim import Scenario, SimConfig, run_scenario
    from rnnbatchsim.workload import LengthDistribution

    sc = Scenario(model=MNMT, accel=EPurConfig(),
                  policy=PolicyConfig(policy="cellular", batch_size=64,
                                      cell_granularity=1),
                  arrival_rate=100.0,
                  length_distribution=LengthDistribution.builtin("nmt_like"),
                  sim=SimConfig(duration_s=120.0, seed=1))
    rows = {}
    originals = kernels.CellularRunner
    for name, mod in BACKENDS.items():
        kernels.CellularRunner = mod.CellularRunner
        rows[name] = timeit(lambda: run_scenario(sc), repeat=2)
    kernels.CellularRunner = originals
    return "run_scenario cellular (120 s simulated)", rows


def main():
    print(f"backends available: {', '.join(BACKENDS)}")
    for bench in (bench_lpt_pack, bench_cellular_kernel, bench_full_scenario):
        label, rows = bench()
        line = f"{label}: " + "  ".join(f"{k}={v * 1e3:.1f}ms" for k, v in rows.items())
        if len(rows) == 2:
            line += f"  speedup={rows['python'] / rows['cython']:.1f}x"
        print(line)


if __name__ == "__main__":
    main()

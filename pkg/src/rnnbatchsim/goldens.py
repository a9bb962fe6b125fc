"""Hand-encoded micro-scenarios replaying the batching schedules event-for-event.

Five tiny workloads pin down the observable behavior of each policy: the
batch compositions, join times, layer boundaries and completion sets that a
correct implementation must produce. They run on an idealized single-cycle
accelerator (1 Hz, one cycle per time-step, free weight fetch) so one
simulated second equals one time-step slot and the logs can be checked by
hand.

Request ids in the logs are 0-based trace indices. Expected logs live in
data/goldens.json and are only regenerated through bless() (CLI --bless).
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .accel import EPurConfig
from .rnn import RnnModel
from .sched import PolicyConfig
from .sim import Scenario, SimConfig, run_scenario
from .workload import LengthDistribution, Trace

GOLDEN_NAMES = ("padding", "bucketing", "cellular",
                "ebatch_single_layer", "ebatch_two_layer")

_UNIT_ACCEL = EPurConfig(num_lanes=4, dpu_width=64, num_compute_units=4,
                         frequency_hz=1.0, weight_buffer_bytes=1 << 30,
                         dram_bandwidth_bytes_per_sec=float("inf"),
                         pipeline_latency_cycles=0)


def _model(layers: int) -> RnnModel:
    return RnnModel(name=f"unit{layers}", cell_type="lstm", num_layers=layers,
                    cell_size=4, input_size=4)


def _trace(arrivals, lengths) -> Trace:
    return Trace(arrival_time=np.asarray(arrivals, dtype=np.float64),
                 time_steps=np.asarray(lengths, dtype=np.int64))


def build_scenario(name: str) -> tuple[Scenario, Trace]:
    sim = SimConfig(duration_s=50.0, warmup_fraction=0.0, seed=0)
    dist = LengthDistribution.constant(1)  # unused: goldens carry explicit traces
    if name == "padding":
        policy = PolicyConfig(policy="padding", batch_size=4, timeout_ms=0.0)
        trace = _trace([0, 0, 0, 0, 0.5, 1.0], [1, 2, 3, 4, 3, 2])
        layers = 1
    elif name == "bucketing":
        policy = PolicyConfig(policy="bucketing", batch_size=4, bucket_width=1,
                              bucket_mode="anchored", timeout_ms=0.0)
        trace = _trace([0, 0, 0, 0, 0, 0.5], [1, 2, 4, 5, 3, 2])
        layers = 1
    elif name == "cellular":
        policy = PolicyConfig(policy="cellular", batch_size=4, cell_granularity=1)
        trace = _trace([0, 0, 0, 0, 0.5, 1.5], [1, 2, 3, 4, 3, 2])
        layers = 1
    elif name == "ebatch_single_layer":
        policy = PolicyConfig(policy="ebatch", batch_size=4,
                              max_timesteps_per_lane=3, timeout_ms=2000.0)
        trace = _trace([0, 0, 0, 0, 0.5, 1.5, 4.0, 4.0],
                       [1, 2, 3, 4, 4, 2, 2, 2])
        layers = 1
    elif name == "ebatch_two_layer":
        policy = PolicyConfig(policy="ebatch", batch_size=4,
                              max_timesteps_per_lane=3, timeout_ms=2000.0)
        trace = _trace([0, 0, 0, 0, 0.5, 3.2, 3.5], [1, 2, 3, 4, 4, 2, 2])
        layers = 2
    else:
        raise ValueError(f"unknown golden scenario {name!r}")
    scenario = Scenario(model=_model(layers), accel=_UNIT_ACCEL, policy=policy,
                        length_distribution=dist, sim=sim)
    return scenario, trace


def run_golden(name: str) -> list[dict]:
    scenario, trace = build_scenario(name)
    log: list[dict] = []
    run_scenario(scenario, trace=trace, log=log.append)
    return log


def _expected_path():
    return resources.files("rnnbatchsim.data").joinpath("goldens.json")


def load_expected() -> dict:
    with resources.as_file(_expected_path()) as path:
        with open(path) as fh:
            return json.load(fh)


def diff_logs(expected: list, actual: list) -> str | None:
    """First divergence between two event logs, or None when identical."""
    for i, (e, a) in enumerate(zip(expected, actual)):
        if e != a:
            return f"event {i}:\n  expected {e}\n  actual   {a}"
    if len(expected) != len(actual):
        return (f"length mismatch: expected {len(expected)} events, "
                f"got {len(actual)}")
    return None


def replay_all() -> list[tuple[str, str | None]]:
    """Run every golden scenario against its stored log; None means match."""
    expected = load_expected()
    out = []
    for name in GOLDEN_NAMES:
        out.append((name, diff_logs(expected[name], run_golden(name))))
    return out


def bless(path=None) -> None:
    """Regenerate the stored golden logs from the current implementation."""
    logs = {name: run_golden(name) for name in GOLDEN_NAMES}
    if path is None:
        with resources.as_file(_expected_path()) as p:
            path = p
    with open(path, "w") as fh:
        json.dump(logs, fh, indent=1)
        fh.write("\n")

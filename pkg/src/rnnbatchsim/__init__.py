"""Discrete-event simulator for batched RNN inference serving.

Models four batch-formation policies (sequence padding, bucketing, cellular
batching, e-batch) on two accelerator archetypes (a multi-lane engine with a
shared weight buffer and an output-stationary systolic array) and reports
latency, throughput, utilization, weight traffic and energy per request.
"""

from .accel import (AcceleratorModel, BatchExecutionStats, EPurConfig,
                    TpuConfig, execute_batch_layer, layer_swap,
                    timestep_cycles_epur, timestep_cycles_tpu)
from .energy import EnergyModel, batch_energy, requests_per_joule
from .kernels import BACKEND as KERNEL_BACKEND
from .report import CompareResult, compare, write_report_csv, write_report_json
from .rnn import (BUILTIN_MODELS, DEEPSPEECH2, MNMT, LayerCost, RnnModel,
                  gate_count, layer_cost, model_weight_bytes)
from .sched import (BatchPlan, PendingRequest, PolicyConfig, Segment,
                    form_batch_bucketing, form_batch_ebatch,
                    form_batch_padding, greedy_partition)
from .sim import (MetricsReport, Scenario, ScenarioError, SimConfig,
                  max_sustainable_load, run_scenario, saturation_sweep)
from .workload import (LengthDistribution, Request, Trace, TraceConfig,
                       generate_trace, sample_length)

__version__ = "0.1.0"

__all__ = [
    "AcceleratorModel", "BatchExecutionStats", "BatchPlan", "BUILTIN_MODELS",
    "CompareResult", "DEEPSPEECH2", "EnergyModel", "EPurConfig",
    "KERNEL_BACKEND", "LayerCost", "LengthDistribution", "MetricsReport",
    "MNMT", "PendingRequest", "PolicyConfig", "Request", "RnnModel",
    "Scenario", "ScenarioError", "Segment", "SimConfig", "Trace",
    "TraceConfig", "TpuConfig", "batch_energy", "compare",
    "execute_batch_layer", "form_batch_bucketing", "form_batch_ebatch",
    "form_batch_padding", "gate_count", "generate_trace", "greedy_partition",
    "layer_cost", "layer_swap", "max_sustainable_load", "model_weight_bytes",
    "requests_per_joule", "run_scenario", "sample_length", "saturation_sweep",
    "timestep_cycles_epur", "timestep_cycles_tpu", "write_report_csv",
    "write_report_json",
]

"""Analytic cost model for stacked LSTM/GRU layers.

Nothing here evaluates a network numerically. A recurrent layer is reduced
to the quantities that drive serving cost: weight footprint, multiply
-accumulates per time-step, and activation bytes moved per time-step. Every
gate owns two weight matrices (one against the layer input, one against the
recurrent state), so per layer and time-step the work is

    gates * (input_width + cell_size) * cell_size   MACs

and the weight footprint is the same count scaled by the weight precision.
Element-wise ops (sigmoid/tanh/Hadamard) are excluded; they overlap with the
dot products on the modeled hardware and only show up as a fixed pipeline
latency constant in the accelerator timing model.
"""

from dataclasses import dataclass

GATE_COUNTS = {"lstm": 4, "gru": 3}


@dataclass(frozen=True)
class RnnModel:
    """Static description of a stacked unidirectional RNN."""

    name: str
    cell_type: str  # "lstm" or "gru"
    num_layers: int
    cell_size: int
    input_size: int
    bytes_per_weight: int = 2
    bytes_per_activation: int = 2

    def __post_init__(self):
        if self.cell_type.lower() not in GATE_COUNTS:
            raise ValueError(f"unknown cell_type {self.cell_type!r} (expected LSTM or GRU)")
        object.__setattr__(self, "cell_type", self.cell_type.lower())
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.cell_size < 1 or self.input_size < 1:
            raise ValueError("cell_size and input_size must be >= 1")
        if self.bytes_per_weight not in (1, 2):
            raise ValueError("bytes_per_weight must be 1 or 2")
        if self.bytes_per_activation not in (1, 2):
            raise ValueError("bytes_per_activation must be 1 or 2")

    @property
    def gates(self) -> int:
        return GATE_COUNTS[self.cell_type]

    def layer_input_size(self, layer_index: int) -> int:
        """Input width seen by a layer; stacked layers consume h_t of the previous one."""
        if not 0 <= layer_index < self.num_layers:
            raise IndexError(f"layer_index {layer_index} out of range for {self.num_layers} layers")
        return self.input_size if layer_index == 0 else self.cell_size


@dataclass(frozen=True)
class LayerCost:
    weight_bytes: int
    bias_bytes: int
    macs_per_timestep: int
    output_bytes_per_timestep: int


def gate_count(cell_type: str) -> int:
    """Weight-bearing blocks per cell: 4 for LSTM (i, f, g, o), 3 for GRU (z, r, candidate)."""
    try:
        return GATE_COUNTS[cell_type.lower()]
    except KeyError:
        raise ValueError(f"unknown cell_type {cell_type!r}") from None


def layer_cost(model: RnnModel, layer_index: int) -> LayerCost:
    """Weight/MAC/activation cost of one layer for one time-step of one sequence."""
    i_eff = model.layer_input_size(layer_index)
    g = model.gates
    h = model.cell_size
    macs = g * (i_eff + h) * h
    return LayerCost(
        weight_bytes=macs * model.bytes_per_weight,
        bias_bytes=g * h * model.bytes_per_weight,
        macs_per_timestep=macs,
        output_bytes_per_timestep=h * model.bytes_per_activation,
    )


def model_weight_bytes(model: RnnModel) -> int:
    """Total weight footprint across layers (biases excluded)."""
    return sum(layer_cost(model, i).weight_bytes for i in range(model.num_layers))


# Benchmark models. DeepSpeech2's layer-0 feature width is not part of the
# published table; it defaults to the cell size and can be overridden in a
# scenario file.
DEEPSPEECH2 = RnnModel(name="deepspeech2", cell_type="gru", num_layers=5,
                       cell_size=800, input_size=800)
MNMT = RnnModel(name="mnmt", cell_type="lstm", num_layers=8,
                cell_size=1024, input_size=1024)

BUILTIN_MODELS = {m.name: m for m in (DEEPSPEECH2, MNMT)}

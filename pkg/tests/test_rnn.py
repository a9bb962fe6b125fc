"""Cost model: hand-computed constants and structural properties."""

import pytest
from hypothesis import given, strategies as st

from rnnbatchsim.rnn import (DEEPSPEECH2, MNMT, RnnModel, gate_count,
                             layer_cost, model_weight_bytes)


def test_gate_counts():
    assert gate_count("lstm") == 4
    assert gate_count("LSTM") == 4
    assert gate_count("gru") == 3


def test_invalid_cell_type_rejected_at_construction():
    with pytest.raises(ValueError):
        gate_count("rnn")
    with pytest.raises(ValueError):
        RnnModel(name="x", cell_type="vanilla", num_layers=1, cell_size=4, input_size=4)


def test_zero_width_dimensions_rejected():
    with pytest.raises(ValueError):
        RnnModel(name="x", cell_type="lstm", num_layers=1, cell_size=64, input_size=0)
    with pytest.raises(ValueError):
        RnnModel(name="x", cell_type="lstm", num_layers=0, cell_size=64, input_size=64)


def test_mnmt_layer_cost():
    # 4 gates * (1024 + 1024) * 1024 * 2 bytes, recomputed by hand
    cost = layer_cost(MNMT, 3)
    assert cost.weight_bytes == 4 * 2048 * 1024 * 2 == 16_777_216
    assert cost.macs_per_timestep == 8_388_608
    assert cost.bias_bytes == 4 * 1024 * 2
    assert cost.output_bytes_per_timestep == 2048


def test_deepspeech_layer_cost():
    cost = layer_cost(DEEPSPEECH2, 1)
    assert cost.weight_bytes == 3 * 1600 * 800 * 2 == 7_680_000


def test_unit_sizes():
    m = RnnModel(name="tiny", cell_type="lstm", num_layers=1, cell_size=1,
                 input_size=1, bytes_per_weight=1, bytes_per_activation=1)
    assert layer_cost(m, 0).weight_bytes == 4 * 2 * 1 * 1 == 8


def test_model_weight_bytes():
    assert model_weight_bytes(MNMT) == 8 * 16_777_216 == 128 * 2**20
    assert model_weight_bytes(DEEPSPEECH2) == 5 * 7_680_000
    one = RnnModel(name="one", cell_type="gru", num_layers=1, cell_size=16,
                   input_size=5)
    assert model_weight_bytes(one) == layer_cost(one, 0).weight_bytes


def test_layer_index_out_of_range():
    with pytest.raises(IndexError):
        layer_cost(MNMT, 8)


@given(st.integers(1, 64), st.integers(1, 64), st.sampled_from(["lstm", "gru"]),
       st.integers(2, 5), st.sampled_from([1, 2]))
def test_structural_properties(h, i, cell, layers, bpw):
    m = RnnModel(name="p", cell_type=cell, num_layers=layers, cell_size=h,
                 input_size=i, bytes_per_weight=bpw)
    deep = layer_cost(m, 1)
    # layers past the first never see input_size
    other = RnnModel(name="p2", cell_type=cell, num_layers=layers, cell_size=h,
                     input_size=i + 7, bytes_per_weight=bpw)
    assert layer_cost(other, 1) == deep
    # every weight participates in exactly one MAC per time-step
    for layer in range(layers):
        cost = layer_cost(m, layer)
        assert cost.macs_per_timestep * bpw == cost.weight_bytes


def test_quadratic_scaling_in_cell_size():
    base = RnnModel(name="b", cell_type="lstm", num_layers=2, cell_size=32,
                    input_size=32)
    double = RnnModel(name="d", cell_type="lstm", num_layers=2, cell_size=64,
                      input_size=64)
    assert layer_cost(double, 1).macs_per_timestep == \
        4 * layer_cost(base, 1).macs_per_timestep


def test_linear_scaling_in_gate_count():
    lstm = RnnModel(name="l", cell_type="lstm", num_layers=1, cell_size=32,
                    input_size=32)
    gru = RnnModel(name="g", cell_type="gru", num_layers=1, cell_size=32,
                   input_size=32)
    assert layer_cost(lstm, 0).weight_bytes * 3 == \
        layer_cost(gru, 0).weight_bytes * 4

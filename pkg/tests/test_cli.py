"""CLI: exit codes, config validation, seed overrides, figure replay."""

import json
from pathlib import Path

import pytest

from rnnbatchsim.cli import main
from rnnbatchsim.report import read_report_csv

REPO = Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"


def fast_scenario(tmp_path, **overrides) -> Path:
    data = {
        "model": {"name": "toy", "cell_type": "lstm", "num_layers": 2,
                  "cell_size": 64, "input_size": 64},
        "accelerator": {"kind": "epur", "num_lanes": 8, "frequency_hz": 1e6,
                        "dram_bandwidth_bytes_per_sec": 1e9},
        "policy": {"policy": "ebatch", "batch_size": 8, "timeout_ms": 2.0},
        "workload": {"arrival_rate": 50.0,
                     "length_distribution": {"kind": "uniform", "min": 2, "max": 30}},
        "sim": {"duration_s": 30.0, "seed": 3},
    }
    data.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    return path


def test_run_shipped_scenario(tmp_path):
    out = tmp_path / "report.csv"
    code = main(["run", str(SCENARIOS / "mnmt_epur_ebatch.json"),
                 "--output", str(out)])
    assert code == 0
    rows = read_report_csv(out)
    assert len(rows) == 1 and rows[0]["policy"] == "ebatch"


def test_run_rejects_oversized_batch(tmp_path, capsys):
    cfg = fast_scenario(tmp_path, policy={"policy": "padding", "batch_size": 9})
    assert main(["run", str(cfg)]) == 2
    assert "batch_size" in capsys.readouterr().err


def test_run_rejects_unknown_key(tmp_path, capsys):
    cfg = fast_scenario(tmp_path, extra_knob=1)
    assert main(["run", str(cfg)]) == 2
    assert "extra_knob" in capsys.readouterr().err


def test_run_rejects_missing_file(capsys):
    assert main(["run", "/nonexistent/scenario.json"]) == 2


def test_model_from_json_file(tmp_path):
    import shutil
    shutil.copy(SCENARIOS / "models" / "deepspeech2.json", tmp_path / "m.json")
    cfg = fast_scenario(
        tmp_path, model="m.json",
        accelerator={"kind": "epur", "num_lanes": 8},
        policy={"policy": "padding", "batch_size": 8, "timeout_ms": 2.0},
        workload={"arrival_rate": 3.0,
                  "length_distribution": {"kind": "uniform", "min": 2, "max": 10}},
        sim={"duration_s": 10.0, "seed": 3})
    out = tmp_path / "m.csv"
    assert main(["run", str(cfg), "--output", str(out)]) == 0


def test_seed_override_changes_but_reproduces(tmp_path):
    cfg = fast_scenario(tmp_path)
    outs = []
    for seed, name in ((9, "a.csv"), (9, "b.csv"), (10, "c.csv")):
        out = tmp_path / name
        assert main(["run", str(cfg), "--seed", str(seed),
                     "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]  # identical seed: byte-identical CSV
    assert outs[0] != outs[2]  # different seed: different report


def test_sweep_row_count(tmp_path):
    cfg = fast_scenario(tmp_path, policy=[
        {"policy": "padding", "batch_size": 8, "timeout_ms": 2.0},
        {"policy": "ebatch", "batch_size": 8, "timeout_ms": 2.0},
    ])
    out = tmp_path / "sweep.csv"
    assert main(["sweep", str(cfg), "--loads", "20,40,60,80",
                 "--output", str(out)]) == 0
    rows = read_report_csv(out)
    assert len(rows) == 8
    assert {r["policy"] for r in rows} == {"padding", "ebatch"}


def test_sweep_json_format(tmp_path):
    cfg = fast_scenario(tmp_path)
    out = tmp_path / "sweep.json"
    assert main(["sweep", str(cfg), "--loads", "20,40", "--output", str(out),
                 "--format", "json"]) == 0
    rows = json.loads(out.read_text())
    assert len(rows) == 2


def test_sweep_bad_loads(tmp_path, capsys):
    cfg = fast_scenario(tmp_path)
    assert main(["sweep", str(cfg), "--loads", "40,oops"]) == 2


def test_replay_figures():
    assert main(["replay-figures"]) == 0


def test_replay_detects_divergence(tmp_path, monkeypatch, capsys):
    # a corrupted stored log must fail the replay with a diff
    from rnnbatchsim import goldens
    expected = goldens.load_expected()
    expected["padding"][0]["budget"] = 99
    monkeypatch.setattr(goldens, "load_expected", lambda: expected)
    assert main(["replay-figures"]) == 1
    assert "DIVERGED" in capsys.readouterr().out


def test_bless_writes_file(tmp_path):
    from rnnbatchsim import goldens
    target = tmp_path / "goldens.json"
    goldens.bless(target)
    data = json.loads(target.read_text())
    assert set(data) == set(goldens.GOLDEN_NAMES)

"""Scenario JSON schema: loading, strict validation, defaults.

Top-level keys: model, accelerator, energy, policy, workload, sim. Unknown
keys anywhere are a validation error naming the offending field. The policy
block may be a list, in which case the scenario fans out into one run per
policy (used by the sweep command).
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from .accel import EPurConfig, TpuConfig
from .energy import EnergyModel
from .rnn import BUILTIN_MODELS, RnnModel
from .sched import PolicyConfig
from .sim import Scenario, ScenarioError, SimConfig
from .workload import DistributionError, LengthDistribution

_TOP_KEYS = {"model", "accelerator", "energy", "policy", "workload", "sim"}


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ScenarioError(f"{where}: unknown key {sorted(unknown)[0]!r}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def _load_model(data, base_dir: Path, where="model") -> RnnModel:
    if isinstance(data, str):
        if data in BUILTIN_MODELS:
            return BUILTIN_MODELS[data]
        if data.endswith(".json"):
            try:
                with open(base_dir / data) as fh:
                    return _build(RnnModel, json.load(fh), where)
            except (OSError, json.JSONDecodeError) as exc:
                raise ScenarioError(f"{where}: {exc}") from exc
        raise ScenarioError(f"{where}: unknown builtin model {data!r} "
                            f"(have {sorted(BUILTIN_MODELS)})")
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: expected builtin name, .json path or object")
    return _build(RnnModel, data, where)


def _load_accel(data, where="accelerator"):
    if not isinstance(data, dict) or "kind" not in data:
        raise ScenarioError(f"{where}: expected object with a 'kind' field")
    body = {k: v for k, v in data.items() if k != "kind"}
    if data["kind"] == "epur":
        return _build(EPurConfig, body, where)
    if data["kind"] == "tpu":
        return _build(TpuConfig, body, where)
    raise ScenarioError(f"{where}.kind: expected 'epur' or 'tpu', got {data['kind']!r}")


def _load_distribution(data, base_dir: Path, where="workload.length_distribution"):
    if not isinstance(data, dict) or "kind" not in data:
        raise ScenarioError(f"{where}: expected object with a 'kind' field")
    kind = data["kind"]
    try:
        if kind == "constant":
            _reject_extra(data, {"kind", "value"}, where)
            return LengthDistribution.constant(data["value"])
        if kind == "uniform":
            _reject_extra(data, {"kind", "min", "max"}, where)
            return LengthDistribution.uniform(data["min"], data["max"])
        if kind == "empirical":
            _reject_extra(data, {"kind", "cdf_file", "entries"}, where)
            if "entries" in data:
                return LengthDistribution.empirical(data["entries"])
            ref = data.get("cdf_file")
            if ref is None:
                raise ScenarioError(f"{where}: empirical needs cdf_file or entries")
            if ref.startswith("builtin:"):
                return LengthDistribution.builtin(ref.removeprefix("builtin:"))
            return LengthDistribution.from_csv(base_dir / ref)
    except (DistributionError, KeyError, OSError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc
    raise ScenarioError(f"{where}.kind: unknown kind {kind!r}")


def _reject_extra(data, allowed, where):
    extra = set(data) - allowed
    if extra:
        raise ScenarioError(f"{where}: unknown key {sorted(extra)[0]!r}")


def load_scenario_dict(data: dict, base_dir: Path | str = ".") -> list[Scenario]:
    """Validate a scenario mapping; returns one Scenario per policy entry."""
    base_dir = Path(base_dir)
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"scenario: unknown key {sorted(unknown)[0]!r}")
    for key in ("model", "accelerator", "policy", "workload"):
        if key not in data:
            raise ScenarioError(f"scenario: missing required key {key!r}")

    model = _load_model(data["model"], base_dir)
    accel = _load_accel(data["accelerator"])
    energy = _build(EnergyModel, data.get("energy", {}), "energy")

    wl = dict(data["workload"])
    _reject_extra(wl, {"arrival_rate", "length_distribution"}, "workload")
    if "arrival_rate" not in wl or "length_distribution" not in wl:
        raise ScenarioError("workload: needs arrival_rate and length_distribution")
    dist = _load_distribution(wl["length_distribution"], base_dir)

    sim = _build(SimConfig, data.get("sim", {}), "sim")

    policies = data["policy"] if isinstance(data["policy"], list) else [data["policy"]]
    out = []
    for i, pol in enumerate(policies):
        pc = _build(PolicyConfig, pol, f"policy[{i}]" if len(policies) > 1 else "policy")
        out.append(Scenario(model=model, accel=accel, policy=pc, energy=energy,
                            arrival_rate=wl["arrival_rate"],
                            length_distribution=dist, sim=sim))
    return out


def load_scenario_file(path) -> list[Scenario]:
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return load_scenario_dict(data, base_dir=path.parent)

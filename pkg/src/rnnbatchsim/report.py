"""Serialization of metrics reports and cross-policy comparison tables."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .sim import MetricsReport

CSV_HEADER = ("policy,offered_rps,throughput_rps,mean_latency_ms,p99_latency_ms,"
              "req_per_joule,useful_frac,padded_frac,idle_frac,"
              "dram_weight_MB_per_req,weight_swaps,energy_J")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def report_row(report: MetricsReport) -> list:
    return [
        report.policy,
        _fmt(report.offered_rps),
        _fmt(report.throughput_rps),
        _fmt(report.mean_latency_s * 1e3),
        _fmt(report.p99_latency_s * 1e3),
        _fmt(report.requests_per_joule),
        _fmt(report.useful_frac),
        _fmt(report.padded_frac),
        _fmt(report.idle_frac),
        _fmt(report.dram_weight_bytes_per_request / 1e6),
        str(report.weight_swaps),
        _fmt(report.energy_joules),
    ]


def _sorted_reports(reports) -> list[MetricsReport]:
    if not reports:
        raise ValueError("no reports to write")
    return sorted(reports, key=lambda r: (r.policy, r.offered_rps))


def write_report_csv(reports, path) -> None:
    """Fixed-schema CSV, one row per (policy, offered load), 6 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER.split(","))
        for report in _sorted_reports(reports):
            writer.writerow(report_row(report))


def write_report_json(reports, path) -> None:
    """JSON mirror of the CSV with identical field names."""
    keys = CSV_HEADER.split(",")
    rows = [dict(zip(keys, report_row(r))) for r in _sorted_reports(reports)]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2)
        fh.write("\n")


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER.split(","):
            raise ValueError(f"{path}: unexpected report header")
        return [row for row in reader]


@dataclass(frozen=True)
class CompareResult:
    """Element-wise a/b ratios over a shared load grid."""

    loads: tuple[float, ...]
    throughput_ratio: tuple[float, ...]
    latency_ratio: tuple[float, ...]
    req_per_joule_ratio: tuple[float, ...]
    ceiling_ratio: float  # max achieved throughput, a over b

    def at_load(self, load: float) -> dict:
        i = self.loads.index(load)
        return {"throughput": self.throughput_ratio[i],
                "latency": self.latency_ratio[i],
                "req_per_joule": self.req_per_joule_ratio[i]}


def compare(a_reports, b_reports) -> CompareResult:
    """Ratio table between two report sets sharing a load grid.

    Energy-efficiency ratios are computed from the pre-scale energy totals
    when both sides carry the same scale factor, so rescaling the energy
    model leaves them bit-identical.
    """
    a = sorted(a_reports, key=lambda r: r.offered_rps)
    b = sorted(b_reports, key=lambda r: r.offered_rps)
    if [r.offered_rps for r in a] != [r.offered_rps for r in b]:
        raise ValueError("mismatched load grids")
    rpj = []
    for ra, rb in zip(a, b):
        if ra.energy_scale == rb.energy_scale and ra.energy_base_total > 0 \
                and rb.energy_base_total > 0:
            rpj.append((ra.completed_requests * rb.energy_base_total)
                       / (rb.completed_requests * ra.energy_base_total))
        else:
            rpj.append(ra.requests_per_joule / rb.requests_per_joule)
    return CompareResult(
        loads=tuple(r.offered_rps for r in a),
        throughput_ratio=tuple(ra.throughput_rps / rb.throughput_rps
                               for ra, rb in zip(a, b)),
        latency_ratio=tuple(ra.mean_latency_s / rb.mean_latency_s
                            for ra, rb in zip(a, b)),
        req_per_joule_ratio=tuple(rpj),
        ceiling_ratio=(max(r.throughput_rps for r in a)
                       / max(r.throughput_rps for r in b)),
    )

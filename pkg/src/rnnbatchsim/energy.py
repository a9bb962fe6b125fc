"""Parametric energy model: batch execution statistics -> joules.

All constants enter linearly, so every reported joule figure scales exactly
with the model and every cross-policy ratio is invariant under rescaling.
To make that invariance exact in floating point, the model carries a single
`scale` factor applied once at evaluation time; `scaled(k)` bumps it without
touching the per-component base constants.

Defaults put the weight-fetch DRAM traffic in charge of dynamic energy for
deep models, the regime the accelerator literature reports for RNN serving
(on-chip SRAM and MAC energy one to two orders of magnitude below DRAM per
byte/op, a few tens of milliwatts of static power for a mobile-class part).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

PJ = 1e-12


@dataclass(frozen=True)
class EnergyModel:
    dram_pj_per_byte: float = 60.0
    sram_read_pj_per_byte: float = 0.05
    sram_write_pj_per_byte: float = 0.1
    mac_pj: float = 0.1
    static_watts: float = 0.02
    lane_static_watts: float = 0.002
    scale: float = 1.0

    def __post_init__(self):
        fields = (self.dram_pj_per_byte, self.sram_read_pj_per_byte,
                  self.sram_write_pj_per_byte, self.mac_pj,
                  self.static_watts, self.lane_static_watts, self.scale)
        if any(v < 0 for v in fields):
            raise ValueError("energy constants must be >= 0")

    def scaled(self, k: float) -> "EnergyModel":
        """Multiply every constant by k (tracked as a single exact factor)."""
        return replace(self, scale=self.scale * k)


@dataclass(frozen=True)
class EnergyCounts:
    """Constant-free tallies an engine accumulates; joules come later."""

    dram_bytes: int = 0
    sram_read_bytes: int = 0
    sram_write_bytes: int = 0
    macs: int = 0
    static_seconds: float = 0.0
    lane_seconds: float = 0.0

    def base_components(self, em: EnergyModel) -> dict[str, float]:
        return {
            "dram": self.dram_bytes * em.dram_pj_per_byte * PJ,
            "sram": (self.sram_read_bytes * em.sram_read_pj_per_byte
                     + self.sram_write_bytes * em.sram_write_pj_per_byte) * PJ,
            "mac": self.macs * em.mac_pj * PJ,
            "static": self.static_seconds * em.static_watts,
            "lane_static": self.lane_seconds * em.lane_static_watts,
        }

    def base_total(self, em: EnergyModel) -> float:
        return sum(self.base_components(em).values())

    def total_joules(self, em: EnergyModel) -> float:
        return em.scale * self.base_total(em)


def batch_energy(stats, em: EnergyModel, frequency_hz: float) -> float:
    """Joules attributable to one batch-layer execution.

    DRAM traffic (weights and activations), one SRAM weight-read pass per
    budgeted time-step, a buffer fill per swapped byte, MAC energy for useful
    and padded work alike, and static power over the execution window with
    per-lane static gated off once a lane runs out of useful time-steps.
    """
    wall_s = stats.wall_cycles / frequency_hz
    dram = stats.dram_weight_bytes + stats.dram_activation_bytes
    counts = EnergyCounts(
        dram_bytes=dram,
        sram_read_bytes=stats.sram_weight_reads_bytes,
        sram_write_bytes=stats.dram_weight_bytes,
        macs=stats.mac_count_useful + stats.mac_count_padded,
        static_seconds=wall_s,
        lane_seconds=stats.lane_busy_cycles / frequency_hz,
    )
    return counts.total_joules(em)


def requests_per_joule(total_completed_requests: int, total_joules: float) -> float:
    """Energy-efficiency headline metric."""
    if total_joules <= 0.0:
        if total_completed_requests:
            raise ValueError("nonzero completed requests with zero energy "
                             "(energy model misconfigured)")
        return 0.0
    return total_completed_requests / total_joules

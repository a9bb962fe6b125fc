"""Reproducible request traces: Poisson arrivals, configurable length marginals.

A trace is fully determined by (seed, config). The master seed is split into
two independent sub-streams, one for inter-arrival gaps and one for sequence
lengths, so sweeping the arrival rate re-times the same length sequence
instead of reshuffling it.

Sequence lengths come from a small distribution algebra: a constant, an
integer uniform range, or an empirical CDF table (time_steps, cumulative
probability). The repo ships two synthetic CDFs shaped like production
speech/translation workloads (see data/): support 60..1700 and 5..120.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np


class DistributionError(ValueError):
    """Malformed length-distribution specification."""


@dataclass(frozen=True)
class LengthDistribution:
    """Marginal distribution of per-request time-step counts.

    kind is one of "constant", "uniform", "empirical". Empirical tables are
    validated at construction: strictly increasing CDF ending at exactly 1.0,
    all step values >= 1 and strictly increasing. Sampling can then never
    fail at runtime.
    """

    kind: str
    value: int = 0
    low: int = 0
    high: int = 0
    steps: tuple[int, ...] = field(default=())
    cdf: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind == "constant":
            if self.value < 1:
                raise DistributionError("constant length must be >= 1")
        elif self.kind == "uniform":
            if self.low < 1 or self.high < self.low:
                raise DistributionError("uniform range must satisfy 1 <= min <= max")
        elif self.kind == "empirical":
            if len(self.steps) != len(self.cdf) or not self.steps:
                raise DistributionError("empirical table must be non-empty and aligned")
            if any(s < 1 for s in self.steps):
                raise DistributionError("time-step values must be >= 1")
            if any(b <= a for a, b in zip(self.steps, self.steps[1:])):
                raise DistributionError("time-step values must be strictly increasing")
            if any(b <= a for a, b in zip(self.cdf, self.cdf[1:])):
                raise DistributionError("CDF must be strictly increasing")
            if not (0.0 < self.cdf[0] <= 1.0) or self.cdf[-1] != 1.0:
                raise DistributionError("CDF must lie in (0, 1] and end at exactly 1.0")
        else:
            raise DistributionError(f"unknown distribution kind {self.kind!r}")

    # -- constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value: int) -> "LengthDistribution":
        return cls(kind="constant", value=value)

    @classmethod
    def uniform(cls, low: int, high: int) -> "LengthDistribution":
        return cls(kind="uniform", low=low, high=high)

    @classmethod
    def empirical(cls, entries) -> "LengthDistribution":
        steps = tuple(int(s) for s, _ in entries)
        cdf = tuple(float(c) for _, c in entries)
        return cls(kind="empirical", steps=steps, cdf=cdf)

    @classmethod
    def from_csv(cls, path) -> "LengthDistribution":
        """Load an empirical CDF from a CSV with header time_steps,cdf."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["time_steps", "cdf"]:
                raise DistributionError(f"{path}: expected header 'time_steps,cdf'")
            entries = [(int(row[0]), float(row[1])) for row in reader if row]
        return cls.empirical(entries)

    @classmethod
    def builtin(cls, name: str) -> "LengthDistribution":
        """Load one of the CDFs shipped with the package (e.g. 'nmt_like')."""
        ref = resources.files("rnnbatchsim.data").joinpath(f"{name}.csv")
        with resources.as_file(ref) as path:
            return cls.from_csv(path)

    # -- statistics ---------------------------------------------------------
    def mean(self) -> float:
        """Exact mean, from the table (not sampled)."""
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "uniform":
            return (self.low + self.high) / 2.0
        probs = np.diff(np.concatenate(([0.0], np.asarray(self.cdf))))
        return float(np.dot(probs, np.asarray(self.steps, dtype=float)))

    def max_of(self, n: int) -> float:
        """Exact E[max of n iid draws]; for empirical/constant kinds only."""
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "uniform":
            vals = np.arange(self.low, self.high + 1, dtype=float)
            cdf = (vals - self.low + 1) / (self.high - self.low + 1)
        else:
            vals = np.asarray(self.steps, dtype=float)
            cdf = np.asarray(self.cdf)
        pmax = np.diff(np.concatenate(([0.0], cdf**n)))
        return float(np.dot(pmax, vals))

    @property
    def support_max(self) -> int:
        if self.kind == "constant":
            return self.value
        if self.kind == "uniform":
            return self.high
        return self.steps[-1]

    # -- sampling -----------------------------------------------------------
    def sample_many(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, self.value, dtype=np.int64)
        if self.kind == "uniform":
            return rng.integers(self.low, self.high + 1, size=n, dtype=np.int64)
        u = rng.random(n)
        idx = np.searchsorted(np.asarray(self.cdf), u, side="left")
        return np.asarray(self.steps, dtype=np.int64)[idx]


def sample_length(dist: LengthDistribution, rng: np.random.Generator) -> int:
    """Draw one sequence length.

    Empirical kind returns the step value of the first CDF entry at or above
    a uniform draw in [0, 1). The constant kind consumes no randomness.
    """
    if dist.kind == "constant":
        return dist.value
    return int(dist.sample_many(rng, 1)[0])


@dataclass(frozen=True)
class Request:
    id: int
    arrival_time: float
    total_time_steps: int
    model_id: str = ""


@dataclass(frozen=True)
class TraceConfig:
    arrival_rate: float  # requests per second
    duration: float      # simulated seconds
    length_distribution: LengthDistribution
    seed: int = 0

    def __post_init__(self):
        if self.arrival_rate <= 0:
            raise ValueError("arrival_rate must be > 0")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")


@dataclass(frozen=True)
class Trace:
    """Column-oriented request trace; arrival_time is sorted ascending."""

    arrival_time: np.ndarray  # float64
    time_steps: np.ndarray    # int64
    model_id: str = ""

    def __len__(self) -> int:
        return len(self.arrival_time)

    def requests(self):
        for i in range(len(self.arrival_time)):
            yield Request(i, float(self.arrival_time[i]), int(self.time_steps[i]),
                          self.model_id)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "arrival_time", "time_steps"])
            for i in range(len(self)):
                writer.writerow([i, repr(float(self.arrival_time[i])),
                                 int(self.time_steps[i])])


def generate_trace(config: TraceConfig) -> Trace:
    """Poisson arrivals over [0, duration) with iid lengths from the marginal.

    Inter-arrival gaps are exponential with mean 1/arrival_rate. Identical
    seeds produce bit-identical traces; arrival and length randomness come
    from independent sub-streams of the master seed.
    """
    arr_ss, len_ss = np.random.SeedSequence(config.seed).spawn(2)
    arr_rng = np.random.Generator(np.random.PCG64(arr_ss))
    len_rng = np.random.Generator(np.random.PCG64(len_ss))

    scale = 1.0 / config.arrival_rate
    chunk = max(1024, int(config.arrival_rate * config.duration * 1.05) + 64)
    times = []
    t = 0.0
    while True:
        gaps = arr_rng.exponential(scale, size=chunk)
        cum = t + np.cumsum(gaps)
        if cum.size and cum[-1] >= config.duration:
            times.append(cum[cum < config.duration])
            break
        times.append(cum)
        t = float(cum[-1]) if cum.size else t
        chunk = 1024
    arrivals = np.concatenate(times) if times else np.empty(0)
    lengths = config.length_distribution.sample_many(len_rng, len(arrivals))
    return Trace(arrival_time=arrivals, time_steps=lengths)

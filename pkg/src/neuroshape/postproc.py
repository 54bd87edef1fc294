"""Accumulator post-processing of the summed spike output.

Both algorithms accumulate pulse mass and release it at a constant rate,
turning the multi-level spike sum into a two-level pulse-duration signal.
The fixed variant adds the raw pulses; the variable variant replaces every
pulse onset by an increment whose length scales with the number of pulses
active at that moment.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .netsim import ConfigError, SpikeRaster, _leading_edges


@dataclass
class AccumulatorConfig:
    decrement: float = 1.0
    output_threshold: float = 1.0
    epsilon_norm: float = 7.0
    overflow_limit: float = 1000.0
    # "active": pulses high at the onset step; "edges": onsets at that step only
    count_mode: str = "active"

    def __post_init__(self):
        if not self.decrement > 0:
            raise ConfigError("decrement must be > 0")
        if not self.output_threshold > 0:
            raise ConfigError("output_threshold must be > 0")
        if not self.epsilon_norm > 0:
            raise ConfigError("epsilon_norm must be > 0")
        if self.count_mode not in ("active", "edges"):
            raise ConfigError("count_mode must be 'active' or 'edges'")

    @classmethod
    def for_pulse_width(cls, fire_pulse_steps: int, **kw) -> AccumulatorConfig:
        return cls(epsilon_norm=0.7 * fire_pulse_steps, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AccumulatorTrace:
    a: np.ndarray
    a_out: np.ndarray
    dt: float
    overflow_steps: int = 0
    scheduled_steps: int = 0

    def to_bipolar(self) -> np.ndarray:
        return to_bipolar(self)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,a,a_out\n")
            for k in range(self.a.size):
                fh.write(f"{k * self.dt!r},{self.a[k]!r},{int(self.a_out[k])}\n")


@njit(cache=True)
def _accumulate(increments, decrement, threshold, overflow_limit):
    n = increments.size
    a_trace = np.empty(n)
    out = np.zeros(n, dtype=np.uint8)
    a = 0.0
    overflow = 0
    for t in range(n):
        a += increments[t]
        if a > overflow_limit:
            overflow += 1
        if a >= threshold:
            out[t] = 1
        a = max(a - decrement, 0.0)
        a_trace[t] = a
    return a_trace, out, overflow


def _run(increments: np.ndarray, cfg: AccumulatorConfig, dt: float, scheduled: int = 0) -> AccumulatorTrace:
    a, out, overflow = _accumulate(
        increments.astype(np.float64), float(cfg.decrement), float(cfg.output_threshold), float(cfg.overflow_limit)
    )
    return AccumulatorTrace(a=a, a_out=out, dt=dt, overflow_steps=int(overflow), scheduled_steps=int(scheduled))


def accumulate_fixed(raster: SpikeRaster, cfg: AccumulatorConfig | None = None) -> AccumulatorTrace:
    """Add the summed pulses, output high while the accumulator holds at least the threshold.

    Per step: add, compare, then decrement.  The stored state ``a`` is the
    value after the decrement.
    """
    cfg = cfg or AccumulatorConfig()
    return _run(raster.summed, cfg, raster.dt)


def increment_lengths(raster: SpikeRaster, cfg: AccumulatorConfig) -> np.ndarray:
    """Scheduled increment length per step; zero where no pulse starts."""
    edges = _leading_edges(raster.per_neuron)
    onset = edges.any(axis=0)
    counts = edges.sum(axis=0) if cfg.count_mode == "edges" else raster.summed
    lengths = np.floor(cfg.epsilon_norm * counts + 0.5).astype(np.int64)
    lengths = np.maximum(lengths, 1)
    return np.where(onset, lengths, 0)


def accumulate_variable(raster: SpikeRaster, cfg: AccumulatorConfig | None = None) -> AccumulatorTrace:
    """Replace each pulse onset by a unit increment lasting ``round(epsilon_norm * N_fp)`` steps.

    Simultaneous onsets share one increment.  Overlapping increments add up.
    """
    cfg = cfg or AccumulatorConfig()
    lengths = increment_lengths(raster, cfg)
    n = raster.n_steps
    diff = np.zeros(n + 1, dtype=np.int64)
    starts = np.flatnonzero(lengths)
    np.add.at(diff, starts, 1)
    np.add.at(diff, np.minimum(starts + lengths[starts], n), -1)
    increments = np.cumsum(diff[:n])
    return _run(increments, cfg, raster.dt, scheduled=int(lengths.sum()))


def to_bipolar(trace: AccumulatorTrace) -> np.ndarray:
    return 2.0 * trace.a_out.astype(np.float64) - 1.0

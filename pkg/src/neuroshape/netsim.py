"""Discrete-time simulation of a coupled, non-leaky integrate-and-fire population.

Every neuron integrates the weighted input plus the feedback of all pulse
outputs from the previous step.  Crossing the threshold starts a pulse of
``fire_pulse_steps`` samples and resets the integrator.  The network output
is the amplitude sum of all pulse trains.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit

RESET_MODES = ("to-zero", "subtract-threshold")
SIGNAL_KINDS = ("sine", "zero", "samples")


class ConfigError(ValueError):
    """A configuration value violates its documented constraints."""


class SimulationDiverged(RuntimeError):
    def __init__(self, step: int):
        super().__init__(f"non-finite neuron drive at step {step}")
        self.step = step


@dataclass
class NetworkConfig:
    n_neurons: int = 10
    threshold: float = 1.0
    dt: float = 1e-6
    fire_pulse_steps: int = 10
    input_weights: np.ndarray | None = None
    feedback_weights: np.ndarray | None = None
    reset_mode: str = "to-zero"
    # inhibition cannot push an integrator below zero
    clamp_negative: bool = True
    # drive per step contributed by one active pulse through a unit weight
    feedback_scale: float = 1.0

    def __post_init__(self):
        if self.input_weights is None:
            self.input_weights = np.ones(self.n_neurons)
        if self.feedback_weights is None:
            self.feedback_weights = np.zeros((self.n_neurons, self.n_neurons))
        self.input_weights = np.asarray(self.input_weights, dtype=np.float64)
        self.feedback_weights = np.asarray(self.feedback_weights, dtype=np.float64)
        self.validate()

    def validate(self) -> None:
        n = self.n_neurons
        if int(n) != n or n < 1:
            raise ConfigError(f"n_neurons must be a positive integer, got {n!r}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be > 0, got {self.dt!r}")
        if not self.threshold > 0:
            raise ConfigError(f"threshold must be > 0, got {self.threshold!r}")
        if int(self.fire_pulse_steps) != self.fire_pulse_steps or self.fire_pulse_steps < 1:
            raise ConfigError(f"fire_pulse_steps must be an integer >= 1, got {self.fire_pulse_steps!r}")
        if self.reset_mode not in RESET_MODES:
            raise ConfigError(f"reset_mode must be one of {RESET_MODES}, got {self.reset_mode!r}")
        if self.input_weights.shape != (n,):
            raise ConfigError(f"input_weights must have shape ({n},), got {self.input_weights.shape}")
        if self.feedback_weights.shape != (n, n):
            raise ConfigError(f"feedback_weights must have shape ({n}, {n}), got {self.feedback_weights.shape}")
        if not np.isfinite(self.feedback_scale) or self.feedback_scale < 0:
            raise ConfigError(f"feedback_scale must be finite and >= 0, got {self.feedback_scale!r}")
        if not np.all(np.isfinite(self.feedback_weights)):
            raise ConfigError("feedback_weights contains non-finite entries")

    def with_weights(self, feedback_weights: np.ndarray) -> NetworkConfig:
        w = np.asarray(feedback_weights, dtype=np.float64)
        return NetworkConfig(
            n_neurons=self.n_neurons,
            threshold=self.threshold,
            dt=self.dt,
            fire_pulse_steps=self.fire_pulse_steps,
            input_weights=self.input_weights.copy(),
            feedback_weights=w.reshape(self.n_neurons, self.n_neurons).copy(),
            reset_mode=self.reset_mode,
            clamp_negative=self.clamp_negative,
            feedback_scale=self.feedback_scale,
        )

    def to_dict(self) -> dict:
        return {
            "n_neurons": int(self.n_neurons),
            "threshold": float(self.threshold),
            "dt": float(self.dt),
            "fire_pulse_steps": int(self.fire_pulse_steps),
            "input_weights": self.input_weights.tolist(),
            "feedback_weights": self.feedback_weights.tolist(),
            "reset_mode": self.reset_mode,
            "clamp_negative": bool(self.clamp_negative),
            "feedback_scale": float(self.feedback_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> NetworkConfig:
        return cls(**d)


@dataclass
class InputSignal:
    kind: str = "sine"
    amplitude: float = 0.0005
    frequency: float = 500.0
    dc_offset: float = 0.002
    phase: float = 0.0
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in SIGNAL_KINDS:
            raise ConfigError(f"input kind must be one of {SIGNAL_KINDS}, got {self.kind!r}")
        if self.amplitude < 0:
            raise ConfigError(f"amplitude must be >= 0, got {self.amplitude!r}")
        if self.kind == "samples":
            if self.samples is None:
                raise ConfigError("kind='samples' requires an explicit sample sequence")
            self.samples = np.asarray(self.samples, dtype=np.float64)

    def render(self, n_steps: int, dt: float) -> np.ndarray:
        """Per-step input values x(t) for t = 0 .. n_steps-1."""
        if self.kind == "zero":
            return np.zeros(n_steps)
        if self.kind == "samples":
            if self.samples.size < n_steps:
                raise ConfigError(f"explicit input has {self.samples.size} samples, need {n_steps}")
            return self.samples[:n_steps].copy()
        t = np.arange(n_steps) * dt
        return self.dc_offset + self.amplitude * np.sin(2 * np.pi * self.frequency * t + self.phase)

    def replace(self, **changes) -> InputSignal:
        d = {k: getattr(self, k) for k in ("kind", "amplitude", "frequency", "dc_offset", "phase", "samples")}
        d.update(changes)
        return InputSignal(**d)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "amplitude": float(self.amplitude),
            "frequency": float(self.frequency),
            "dc_offset": float(self.dc_offset),
            "phase": float(self.phase),
        }
        if self.samples is not None:
            d["samples"] = self.samples.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> InputSignal:
        return cls(**d)


@dataclass
class SpikeRaster:
    """Binary pulse trains, one row per neuron."""

    per_neuron: np.ndarray
    dt: float

    @property
    def n_neurons(self) -> int:
        return self.per_neuron.shape[0]

    @property
    def n_steps(self) -> int:
        return self.per_neuron.shape[1]

    @cached_property
    def summed(self) -> np.ndarray:
        return self.per_neuron.sum(axis=0, dtype=np.int64)


@dataclass
class RateStats:
    per_neuron_rates: np.ndarray
    mean_rate: float
    std_rate: float

    def to_dict(self) -> dict:
        return {
            "per_neuron_rates": self.per_neuron_rates.tolist(),
            "mean_rate": self.mean_rate,
            "std_rate": self.std_rate,
        }


@njit(cache=True, nogil=True)
def _integrate(x, w_in, w_fb, theta, pulse_steps, subtract_reset, clamp, v):
    n = v.size
    n_steps = x.size
    out = np.zeros((n, n_steps), dtype=np.uint8)
    remaining = np.zeros(n, dtype=np.int64)
    prev = np.zeros(n, dtype=np.uint8)
    active = np.empty(n, dtype=np.int64)
    for t in range(n_steps):
        n_active = 0
        for j in range(n):
            if prev[j]:
                active[n_active] = j
                n_active += 1
        for i in range(n):
            s = w_in[i] * x[t]
            for k in range(n_active):
                s += w_fb[i, active[k]]
            if not np.isfinite(s):
                return out, t
            vi = v[i] + s
            if vi >= theta:
                remaining[i] = pulse_steps
                if subtract_reset:
                    vi -= theta
                else:
                    vi = 0.0
            if clamp and vi < 0.0:
                vi = 0.0
            v[i] = vi
        for i in range(n):
            if remaining[i] > 0:
                out[i, t] = 1
                prev[i] = 1
                remaining[i] -= 1
            else:
                prev[i] = 0
    return out, -1


def simulate(
    config: NetworkConfig,
    signal: InputSignal,
    n_steps: int,
    seed=None,
    initial_state: np.ndarray | None = None,
) -> SpikeRaster:
    """Run the network for ``n_steps`` steps.

    Integrators start uniformly in ``[0, threshold)`` drawn from ``seed``
    unless ``initial_state`` is given.  The feedback seen at step t is
    ``feedback_weights @ F(t-1)``.  A neuron that crosses threshold while its
    pulse is still high restarts the pulse.
    """
    if n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    x = signal.render(n_steps, config.dt)
    if initial_state is None:
        v = np.random.default_rng(seed).uniform(0.0, config.threshold, config.n_neurons)
    else:
        v = np.array(initial_state, dtype=np.float64)
        if v.shape != (config.n_neurons,):
            raise ConfigError(f"initial_state must have shape ({config.n_neurons},)")
    out, bad_step = _integrate(
        x,
        config.input_weights,
        config.feedback_weights * config.feedback_scale,
        float(config.threshold),
        int(config.fire_pulse_steps),
        config.reset_mode == "subtract-threshold",
        bool(config.clamp_negative),
        v,
    )
    if bad_step >= 0:
        raise SimulationDiverged(int(bad_step))
    return SpikeRaster(per_neuron=out, dt=config.dt)


def _leading_edges(per_neuron: np.ndarray) -> np.ndarray:
    f = per_neuron.astype(np.int8)
    prev = np.zeros_like(f)
    prev[:, 1:] = f[:, :-1]
    return (f == 1) & (prev == 0)


def rate_stats(raster: SpikeRaster) -> RateStats:
    duration = raster.n_steps * raster.dt
    counts = _leading_edges(raster.per_neuron).sum(axis=1)
    rates = counts / duration
    return RateStats(per_neuron_rates=rates, mean_rate=float(rates.mean()), std_rate=float(rates.std()))


def leading_edge_raster(raster: SpikeRaster) -> SpikeRaster:
    """Collapse every pulse to a one-sample impulse at its first step."""
    return SpikeRaster(per_neuron=_leading_edges(raster.per_neuron).astype(np.uint8), dt=raster.dt)


def init_random_weights(n_neurons: int, low: float, high: float, seed=None) -> np.ndarray:
    if low > high:
        raise ConfigError(f"low ({low}) must not exceed high ({high})")
    return np.random.default_rng(seed).uniform(low, high, size=(n_neurons, n_neurons))


def dc_for_rate(rate: float, config: NetworkConfig) -> float:
    """Constant per-step drive that makes an uncoupled neuron fire at ``rate``."""
    return rate * config.threshold * config.dt

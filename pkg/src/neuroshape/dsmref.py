"""First-order delta-sigma modulator used as the conventional reference."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from .netsim import ConfigError, InputSignal


class ModulatorOverload(UserWarning):
    pass


@dataclass
class DsmConfig:
    sample_rate: float = 1e6
    integrator_initial: float = 0.0
    feedback_gain: float = 1.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ConfigError("sample_rate must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@njit(cache=True)
def _loop(x, v, gain):
    y = np.empty(x.size)
    y_prev = 0.0
    for t in range(x.size):
        v += x[t] - gain * y_prev
        y_prev = 1.0 if v >= 0.0 else -1.0
        y[t] = y_prev
    return y


def dsm_simulate(cfg: DsmConfig, signal, n_steps: int) -> np.ndarray:
    """Bitstream in {-1, +1}; ``signal`` is an InputSignal or an explicit sample array.

    The loop is v <- v + x(t) - g*y(t-1), y(t) = sign(v) with ties going to +1.
    There is no output before the first step, so y(-1) = 0.
    """
    if isinstance(signal, InputSignal):
        x = signal.render(n_steps, 1.0 / cfg.sample_rate)
    else:
        x = np.asarray(signal, dtype=np.float64)[:n_steps]
        if x.size < n_steps:
            raise ConfigError(f"input has {x.size} samples, need {n_steps}")
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    if peak > 1.0:
        warnings.warn(f"input peak {peak:.3g} exceeds the quantizer range [-1, 1]", ModulatorOverload, stacklevel=2)
    return _loop(x, float(cfg.integrator_initial), float(cfg.feedback_gain))

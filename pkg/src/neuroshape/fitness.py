"""Objective functions scoring a feedback weight matrix (lower is better)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import netsim, spectral
from .netsim import InputSignal, NetworkConfig, RateStats


class DegenerateNetwork(ValueError):
    """The network produced no pulses, so rate-based terms are undefined."""


@dataclass
class AnalysisSettings:
    n_steps: int = 2**17
    fft_size: int = 2**16
    window: str = "hann"
    n_segments: int | None = None
    exclusion_bins: int = 3
    baseband: tuple[float, float] = (10.0, 1000.0)
    near_band: float = 200.0
    pll_threshold: float = 10.0

    def __post_init__(self):
        self.baseband = tuple(float(b) for b in self.baseband)
        if self.n_steps < self.fft_size:
            raise netsim.ConfigError(f"n_steps ({self.n_steps}) must be >= fft_size ({self.fft_size})")
        if self.window not in spectral.WINDOWS:
            raise netsim.ConfigError(f"window must be one of {spectral.WINDOWS}")
        if not 0 <= self.baseband[0] < self.baseband[1]:
            raise netsim.ConfigError(f"invalid baseband {self.baseband}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["baseband"] = list(self.baseband)
        return d


@dataclass
class ObjectiveParams:
    snr_scale: float = 40.0
    snr_offset: float = 20.0
    target_rate: float = 2000.0
    sigma_threshold: float = 0.2
    c: float = 1.0
    c_off: float = 0.1
    f_norm: float = 200.0
    n_freq_bins: int = 32
    baseband: tuple[float, float] = (10.0, 1000.0)
    signal_amplitude: float | None = None
    n_repeats: int = 1
    signed_rate_term: bool = False
    worst_fitness: float = 1000.0
    # grid for the separation term; None means the baseband
    separation_band: tuple[float, float] | None = None

    def __post_init__(self):
        self.baseband = tuple(float(b) for b in self.baseband)
        if self.separation_band is not None:
            self.separation_band = tuple(float(b) for b in self.separation_band)
        if not self.f_norm > 0:
            raise netsim.ConfigError("f_norm must be > 0")
        if self.c_off < 0:
            raise netsim.ConfigError("c_off must be >= 0")
        if self.n_freq_bins < 1:
            raise netsim.ConfigError("n_freq_bins must be >= 1")
        if self.n_repeats < 1:
            raise netsim.ConfigError("n_repeats must be >= 1")
        if not self.target_rate > 0:
            raise netsim.ConfigError("target_rate must be > 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["baseband"] = list(self.baseband)
        if self.separation_band is not None:
            d["separation_band"] = list(self.separation_band)
        return d


@dataclass
class SimEnv:
    """Everything besides the weights that an evaluation needs."""

    network: NetworkConfig
    signal: InputSignal
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)


@dataclass
class Measurement:
    snr: spectral.SnrReport
    rates: RateStats
    spectrum: spectral.Spectrum
    raster: netsim.SpikeRaster


@dataclass
class FitnessBreakdown:
    snr_term: float
    rate_term: float
    third_term: float
    snr_db: float
    mean_rate: float
    std_rate: float

    @property
    def total(self) -> float:
        return self.snr_term + self.rate_term + self.third_term


def k_sigma(mean_rate: float, std_rate: float, sigma_threshold: float = 0.2) -> float:
    if mean_rate <= 0:
        raise DegenerateNetwork("mean firing rate is zero")
    ratio = std_rate / mean_rate
    if ratio >= sigma_threshold:
        return 2.0 * (ratio - sigma_threshold)
    return 0.0


def separation_measure(per_neuron_rates, bin_frequencies, f_norm: float, c_off: float) -> float:
    """Sum over bins of the product over neurons of (Gaussian bell + c_off).

    Each neuron's rate carries a bell of width ``f_norm``.  Bins where several
    bells overlap dominate the sum, so clustered rates score high.
    """
    rates = np.asarray(per_neuron_rates, dtype=np.float64)
    bins = np.asarray(bin_frequencies, dtype=np.float64)
    if rates.size == 0 or bins.size == 0:
        raise ValueError("rates and bins must be non-empty")
    bells = np.exp(-(((bins[:, None] - rates[None, :]) / f_norm) ** 2)) + c_off
    return float(np.prod(bells, axis=1).sum())


def separation_bins(params: ObjectiveParams) -> np.ndarray:
    """Centres of ``n_freq_bins`` equal divisions of the separation band."""
    lo, hi = params.baseband if params.separation_band is None else params.separation_band
    width = (hi - lo) / params.n_freq_bins
    return lo + width * (np.arange(params.n_freq_bins) + 0.5)


def snr_term(snr_db: float, params: ObjectiveParams) -> float:
    return params.snr_scale / (snr_db + params.snr_offset)


def rate_term(mean_rate: float, params: ObjectiveParams) -> float:
    dev = (mean_rate - params.target_rate) / params.target_rate
    return dev if params.signed_rate_term else abs(dev)


def pick_signal_frequency(rng: np.random.Generator, env: SimEnv, baseband) -> float:
    """Random bin-centred tone inside ``baseband`` whose exclusion group stays in band."""
    a = env.analysis
    bin_width = 1.0 / (a.fft_size * env.network.dt)
    k_lo = math.ceil(baseband[0] / bin_width) + a.exclusion_bins
    k_hi = math.floor(baseband[1] / bin_width) - a.exclusion_bins
    if k_hi < k_lo:
        raise netsim.ConfigError("baseband too narrow for the analysis resolution and exclusion window")
    return float(rng.integers(k_lo, k_hi + 1) * bin_width)


def measure(
    weights: np.ndarray,
    env: SimEnv,
    signal_frequency: float,
    seed,
    baseband=None,
    signal_amplitude: float | None = None,
) -> Measurement:
    """Simulate the network with a tone at ``signal_frequency`` and analyse the summed output."""
    a = env.analysis
    baseband = a.baseband if baseband is None else baseband
    config = env.network.with_weights(weights)
    changes = {"frequency": signal_frequency}
    if signal_amplitude is not None:
        changes["amplitude"] = signal_amplitude
    signal = env.signal.replace(**changes)
    raster = netsim.simulate(config, signal, a.n_steps, seed)
    spectrum = spectral.power_spectrum(raster.summed, 1.0 / config.dt, a.fft_size, a.window, a.n_segments)
    snr = spectral.snr_db(spectrum, signal_frequency, baseband, a.exclusion_bins)
    rates = netsim.rate_stats(raster)
    if rates.mean_rate > 0:
        snr.osr = spectral.osr(rates.mean_rate, config.n_neurons, baseband[1])
    snr.rate_stats = rates
    return Measurement(snr=snr, rates=rates, spectrum=spectrum, raster=raster)


def _breakdown(m: Measurement, params: ObjectiveParams, version: str) -> FitnessBreakdown | None:
    rates = m.rates
    snr = m.snr.snr_db
    if rates.mean_rate <= 0 or not np.isfinite(snr) or snr + params.snr_offset <= 0:
        return None
    if version == "v1":
        third = k_sigma(rates.mean_rate, rates.std_rate, params.sigma_threshold)
    else:
        third = params.c * separation_measure(rates.per_neuron_rates, separation_bins(params), params.f_norm, params.c_off)
    return FitnessBreakdown(
        snr_term=snr_term(snr, params),
        rate_term=rate_term(rates.mean_rate, params),
        third_term=third,
        snr_db=snr,
        mean_rate=rates.mean_rate,
        std_rate=rates.std_rate,
    )


def evaluate(genome, params: ObjectiveParams, env: SimEnv, seed, version: str = "v2", n_repeats: int | None = None):
    """Average fitness over ``n_repeats`` runs, each with its own tone and integrator start.

    Returns ``(fitness, breakdowns)``; a silent or diverged run scores
    ``params.worst_fitness`` and contributes ``None`` to the breakdown list.
    """
    if version not in ("v1", "v2"):
        raise ValueError(f"objective version must be 'v1' or 'v2', got {version!r}")
    genes = np.asarray(genome, dtype=np.float64)
    n = env.network.n_neurons
    if genes.size != n * n:
        raise ValueError(f"genome has {genes.size} genes, network needs {n * n}")
    n_repeats = params.n_repeats if n_repeats is None else n_repeats
    values, parts = [], []
    for child in np.random.SeedSequence(seed).spawn(n_repeats):
        rng = np.random.default_rng(child)
        freq = pick_signal_frequency(rng, env, params.baseband)
        sim_seed = int(rng.integers(2**63))
        try:
            m = measure(genes.reshape(n, n), env, freq, sim_seed, params.baseband, params.signal_amplitude)
            b = _breakdown(m, params, version)
        except netsim.SimulationDiverged:
            b = None
        parts.append(b)
        values.append(params.worst_fitness if b is None else b.total)
    return float(np.mean(values)), parts


def objective_v1(genome, params: ObjectiveParams, env: SimEnv, seed) -> float:
    """SNR term + rate term + spread penalty, averaged over ``params.n_repeats`` runs."""
    return evaluate(genome, params, env, seed, "v1")[0]


def objective_v2(genome, params: ObjectiveParams, env: SimEnv, seed) -> float:
    """SNR term + rate term + weighted rate-separation measure."""
    return evaluate(genome, params, env, seed, "v2")[0]


def compose(snr_db: float, mean_rate: float, std_rate: float, params: ObjectiveParams) -> float:
    """Closed-form value of the spread-penalty objective from already measured quantities."""
    return snr_term(snr_db, params) + rate_term(mean_rate, params) + k_sigma(mean_rate, std_rate, params.sigma_threshold)


class Objective:
    """Callable ``(genome, seed, n_repeats) -> fitness`` handle for the GA."""

    def __init__(self, params: ObjectiveParams, env: SimEnv, version: str = "v2"):
        self.params = params
        self.env = env
        self.version = version

    def __call__(self, genome, seed, n_repeats: int = 1) -> float:
        return evaluate(genome, self.params, self.env, seed, self.version, n_repeats)[0]


def calibrate_c(params: ObjectiveParams, env: SimEnv, init_range=(-0.2, 0.0), n_samples: int = 16, seed=0) -> float:
    """Weight that makes the separation term average 1 over random initial genomes."""
    n = env.network.n_neurons
    bins = separation_bins(params)
    values = []
    for child in np.random.SeedSequence(seed).spawn(n_samples):
        rng = np.random.default_rng(child)
        w = rng.uniform(init_range[0], init_range[1], size=(n, n))
        freq = pick_signal_frequency(rng, env, params.baseband)
        m = measure(w, env, freq, int(rng.integers(2**63)), params.baseband, params.signal_amplitude)
        values.append(separation_measure(m.rates.per_neuron_rates, bins, params.f_norm, params.c_off))
    mean = float(np.mean(values))
    return 1.0 / mean if mean > 0 else 1.0

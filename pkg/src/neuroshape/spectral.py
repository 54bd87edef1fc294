"""Spectrum estimation and the measurements taken on it (SNR, OSR, shaping slope)."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .netsim import RateStats

WINDOWS = ("rectangular", "hann")
POWER_FLOOR_DB = -200.0


class InsufficientData(ValueError):
    pass


class BasebandEdgeWarning(UserWarning):
    pass


@dataclass
class Spectrum:
    bin_frequencies: np.ndarray
    power: np.ndarray
    sample_rate: float
    window: str
    n_segments: int

    @property
    def fft_size(self) -> int:
        return 2 * (self.bin_frequencies.size - 1)

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.fft_size

    def bin_index(self, frequency: float) -> int:
        return int(round(frequency / self.bin_width))

    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            db = 10 * np.log10(self.power)
        return np.maximum(db, POWER_FLOOR_DB)

    def to_csv(self, path) -> None:
        rows = np.column_stack([self.bin_frequencies, self.power_db()])
        np.savetxt(path, rows, delimiter=",", header="freq_hz,power_db", comments="", fmt="%.10g")


@dataclass
class SnrReport:
    signal_frequency: float
    signal_power: float
    noise_power_baseband: float
    snr_db: float
    baseband: tuple[float, float]
    osr: float | None = None
    rate_stats: RateStats | None = None
    edge_truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "signal_frequency": self.signal_frequency,
            "signal_power": self.signal_power,
            "noise_power_baseband": self.noise_power_baseband,
            "snr_db": self.snr_db,
            "baseband": list(self.baseband),
            "osr": self.osr,
            "rate_stats": None if self.rate_stats is None else self.rate_stats.to_dict(),
            "edge_truncated": self.edge_truncated,
        }


def power_spectrum(
    signal,
    sample_rate: float,
    fft_size: int = 2**16,
    window: str = "hann",
    n_segments: int | None = None,
) -> Spectrum:
    """One-sided averaged periodogram in power per bin.

    Segments of ``fft_size`` samples are mean-removed and windowed; hann
    segments overlap by half, rectangular ones do not.  ``n_segments=None``
    uses every segment that fits.  Bin powers are normalised by the window's
    noise bandwidth, so they sum to the signal variance.
    """
    x = np.asarray(signal, dtype=np.float64)
    if fft_size < 2 or fft_size & (fft_size - 1):
        raise ValueError(f"fft_size must be a power of two, got {fft_size}")
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}, got {window!r}")
    if x.size < fft_size:
        raise InsufficientData(f"signal has {x.size} samples, fft_size is {fft_size}")
    hop = fft_size // 2 if window == "hann" else fft_size
    available = 1 + (x.size - fft_size) // hop
    if n_segments is None:
        n_segments = available
    elif n_segments > available:
        raise InsufficientData(f"{n_segments} segments need {fft_size + (n_segments - 1) * hop} samples, got {x.size}")
    x = x[: fft_size + (n_segments - 1) * hop]
    freqs, density = sps.welch(
        x,
        fs=sample_rate,
        window="hann" if window == "hann" else "boxcar",
        nperseg=fft_size,
        noverlap=fft_size - hop,
        detrend="constant",
        scaling="density",
        return_onesided=True,
    )
    power = density * (sample_rate / fft_size)
    return Spectrum(freqs, power, float(sample_rate), window, int(n_segments))


def baseband_mask(spectrum: Spectrum, baseband) -> np.ndarray:
    f = spectrum.bin_frequencies
    return (f >= baseband[0]) & (f <= baseband[1])


def snr_db(spectrum: Spectrum, signal_frequency: float, baseband=(10.0, 1000.0), exclusion_bins: int = 3) -> SnrReport:
    """Signal power in the bins around ``signal_frequency`` against the rest of the baseband."""
    lo, hi = baseband
    if not lo <= signal_frequency <= hi:
        raise ValueError(f"signal frequency {signal_frequency} Hz outside baseband {baseband}")
    if lo < 0 or hi > spectrum.sample_rate / 2:
        raise ValueError(f"baseband {baseband} outside [0, {spectrum.sample_rate / 2}]")
    in_band = baseband_mask(spectrum, baseband)
    k = spectrum.bin_index(signal_frequency)
    idx = np.arange(spectrum.power.size)
    sig = (idx >= k - exclusion_bins) & (idx <= k + exclusion_bins)
    truncated = bool(np.any(sig & ~in_band))
    if truncated:
        warnings.warn(
            f"signal bin group around {signal_frequency} Hz extends past the baseband edge",
            BasebandEdgeWarning,
            stacklevel=2,
        )
    p_sig = float(spectrum.power[sig].sum())
    p_noise = float(spectrum.power[in_band & ~sig].sum())
    with np.errstate(divide="ignore"):
        ratio_db = 10 * np.log10(p_sig / p_noise) if p_noise > 0 else np.inf
        if p_sig == 0:
            ratio_db = -np.inf
    return SnrReport(
        signal_frequency=float(signal_frequency),
        signal_power=p_sig,
        noise_power_baseband=p_noise,
        snr_db=float(ratio_db),
        baseband=(float(lo), float(hi)),
        edge_truncated=truncated,
    )


def osr(mean_rate: float, n_neurons: int, f_baseband: float) -> float:
    """Oversampling ratio of the pooled pulse rate: N * rate / (2 * f_B)."""
    if mean_rate <= 0 or n_neurons <= 0 or f_baseband <= 0:
        raise ValueError("osr inputs must all be positive")
    return n_neurons * mean_rate / (2 * f_baseband)


def noise_slope_db_per_decade(
    spectrum: Spectrum,
    fit_band,
    signal_frequency: float | None = None,
    exclusion_bins: int = 3,
) -> float:
    f = spectrum.bin_frequencies
    usable = (f >= fit_band[0]) & (f <= fit_band[1]) & (f > 0) & (spectrum.power > 0)
    if signal_frequency is not None:
        k = spectrum.bin_index(signal_frequency)
        idx = np.arange(f.size)
        usable &= np.abs(idx - k) > exclusion_bins
    if usable.sum() < 10:
        raise InsufficientData(f"only {int(usable.sum())} usable bins in {fit_band}, need 10")
    slope, _ = np.polyfit(np.log10(f[usable]), 10 * np.log10(spectrum.power[usable]), 1)
    return float(slope)


def pll_skirt_metric(
    spectrum: Spectrum,
    signal_frequency: float,
    near_band: float = 200.0,
    far_band=(10.0, 1000.0),
    exclusion_bins: int = 3,
) -> float:
    """Mean power in the skirts next to the signal peak over mean power in ``far_band``.

    Skirts are the bins within ``near_band`` Hz of the signal, minus the signal
    bin group.  The far band also leaves out the skirts and the signal group.
    A locked, oscillating network raises the skirts far above the rest.
    """
    f = spectrum.bin_frequencies
    idx = np.arange(f.size)
    k = spectrum.bin_index(signal_frequency)
    sig = np.abs(idx - k) <= exclusion_bins
    near = (np.abs(f - signal_frequency) <= near_band) & ~sig & (f > 0)
    far = (f >= far_band[0]) & (f <= far_band[1]) & ~near & ~sig
    if not near.any():
        raise InsufficientData("no bins in the near skirts")
    if not far.any():
        raise InsufficientData("no bins in the far band")
    p_far = spectrum.power[far].mean()
    if p_far == 0:
        return np.inf if spectrum.power[near].mean() > 0 else 1.0
    return float(spectrum.power[near].mean() / p_far)


def band_power(spectrum: Spectrum, center: float, rel_width: float = 0.1) -> float:
    """Mean bin power within ``center * (1 +- rel_width)``."""
    f = spectrum.bin_frequencies
    sel = (f >= center * (1 - rel_width)) & (f <= center * (1 + rel_width))
    return float(spectrum.power[sel].mean())

"""FFT-bin model of a chirp backscatter symbol and power-free LLR metrics.

A tag symbol is observed as a vector of complex FFT bins.  Bit 0 leaves the
excitation peak at its reference bin s; bit 1 moves it half the band away to
s_bar = (s + n_fft/2) mod n_fft, with the peak power optionally split across
s_bar and its two neighbors to model the spectrum leakage caused by the
amplitude step between the tag's antennas.

The proposed LLR metrics score the two candidate bins by how *noise-like*
they are: under Gaussian noise a signal-free bin magnitude is Rayleigh, so
the log-ratio of the two Rayleigh densities needs only the noise variance,
never the received signal power.  A conventional power-based baseline
(Rician vs Rayleigh with an estimated peak amplitude) is included for
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import i0e

__all__ = [
    "MAG_FLOOR",
    "NoiseModel",
    "LeakageModel",
    "SymbolObservation",
    "tag_peak_position",
    "synthesize_observation",
    "synthesize_symbols",
    "llr_basic",
    "llr_basic_many",
    "llr_leakage",
    "llr_leakage_many",
    "llr_conventional",
    "llr_conventional_many",
]

# Magnitudes are clamped here before any log so synthetic zero bins stay finite.
MAG_FLOOR = 1e-30


@dataclass(frozen=True)
class NoiseModel:
    """Per-component Gaussian noise variance and true peak power.

    signal_power feeds only the synthesizer and the conventional baseline;
    the proposed LLR metrics never see it.
    """

    sigma2: float
    signal_power: float = 0.0

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be > 0")
        if self.signal_power < 0:
            raise ValueError("signal_power must be >= 0")


@dataclass(frozen=True)
class LeakageModel:
    """Power split (below, center, above) of a bit-1 peak across adjacent bins."""

    fractions: tuple[float, float, float] = (0.25, 0.5, 0.25)

    def __post_init__(self):
        lo, mid, hi = self.fractions
        if min(self.fractions) < 0:
            raise ValueError("leakage fractions must be >= 0")
        if abs(lo + mid + hi - 1.0) > 1e-12:
            raise ValueError("leakage fractions must sum to 1")
        if mid < max(lo, hi):
            raise ValueError("center bin must keep the largest share")


NO_LEAKAGE = LeakageModel((0.0, 1.0, 0.0))


@dataclass(frozen=True)
class SymbolObservation:
    """One received symbol: complex FFT bins plus the excitation peak bin."""

    bins: np.ndarray
    excitation_peak: int

    def __post_init__(self):
        n = self.bins.shape[0]
        if n < 4 or (n & (n - 1)) != 0:
            raise ValueError("bin count must be a power of two >= 4")
        if not 0 <= self.excitation_peak < n:
            raise ValueError("excitation_peak out of range")

    @property
    def n_fft(self) -> int:
        return self.bins.shape[0]


def tag_peak_position(bit: int, s_i: int, n_fft: int) -> int:
    """Peak bin of the tag chirp: bit 0 keeps s_i, bit 1 shifts half the band."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    if not 0 <= s_i < n_fft:
        raise ValueError(f"s_i must be in [0, {n_fft})")
    if bit == 0:
        return s_i
    return (s_i + n_fft // 2) % n_fft


def synthesize_observation(bit, s_i, noise: NoiseModel, leak: LeakageModel,
                           n_fft: int, rng_seed) -> SymbolObservation:
    """Draw one noisy symbol observation, bit-exact reproducible per seed.

    Bit 0 puts the full sqrt(P) amplitude at s_i; bit 1 spreads sqrt(f*P)
    over the shifted bin and its two neighbors per the leakage fractions
    (the antenna-switching discontinuity appears only on bit 1).
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    rng = np.random.default_rng(rng_seed)
    bins = _noise_bins(rng, noise.sigma2, (n_fft,))
    if noise.signal_power > 0:
        if bit == 0:
            bins[s_i] += np.sqrt(noise.signal_power)
        else:
            s_bar = tag_peak_position(1, s_i, n_fft)
            for off, frac in zip((-1, 0, 1), leak.fractions):
                bins[(s_bar + off) % n_fft] += np.sqrt(frac * noise.signal_power)
    return SymbolObservation(bins=bins, excitation_peak=int(s_i))


def synthesize_symbols(bits, peaks, noise: NoiseModel, leak: LeakageModel,
                       n_fft: int, rng) -> np.ndarray:
    """Vectorized synthesis of many symbols; returns an (M, n_fft) bin array.

    ``peaks`` gives the excitation peak per symbol.  Consumes the generator's
    stream in one block so the result is a pure function of the generator
    state.
    """
    bits = np.asarray(bits, dtype=np.int64)
    peaks = np.asarray(peaks, dtype=np.int64)
    m = bits.size
    bins = _noise_bins(rng, noise.sigma2, (m, n_fft))
    if noise.signal_power > 0 and m:
        rows = np.arange(m)
        zero = bits == 0
        bins[rows[zero], peaks[zero]] += np.sqrt(noise.signal_power)
        ones = rows[~zero]
        if ones.size:
            s_bar = (peaks[~zero] + n_fft // 2) % n_fft
            for off, frac in zip((-1, 0, 1), leak.fractions):
                if frac > 0:
                    bins[ones, (s_bar + off) % n_fft] += np.sqrt(frac * noise.signal_power)
    return bins


def _noise_bins(rng, sigma2, shape):
    g = rng.standard_normal(shape + (2,))
    return np.sqrt(sigma2) * (g[..., 0] + 1j * g[..., 1])


def _mags(bins):
    return np.maximum(np.abs(bins), MAG_FLOOR)


def llr_basic_many(bins, peaks, sigma2: float) -> np.ndarray:
    """Rayleigh-density log-ratio of the two candidate bins, batched.

    L = ln(|f_sbar| / |f_s|) + (|f_s|^2 - |f_sbar|^2) / (2 sigma^2); positive
    favors bit 0.  Needs only the noise variance.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    bins = np.atleast_2d(np.asarray(bins))
    peaks = np.atleast_1d(np.asarray(peaks, dtype=np.int64))
    n_fft = bins.shape[1]
    rows = np.arange(bins.shape[0])
    s_bar = (peaks + n_fft // 2) % n_fft
    ms = _mags(bins[rows, peaks])
    mb = _mags(bins[rows, s_bar])
    return np.log(mb / ms) + (ms**2 - mb**2) / (2.0 * sigma2)


def llr_basic(obs: SymbolObservation, sigma2: float) -> float:
    return float(llr_basic_many(obs.bins[None, :], [obs.excitation_peak], sigma2)[0])


def llr_leakage_many(bins, peaks, sigma2: float) -> np.ndarray:
    """Leakage-corrected LLR: the bit-1 hypothesis pools the shifted bin and
    its two cyclic neighbors, since the antenna step spills peak power there."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    bins = np.atleast_2d(np.asarray(bins))
    peaks = np.atleast_1d(np.asarray(peaks, dtype=np.int64))
    n_fft = bins.shape[1]
    if n_fft < 4:
        raise ValueError("need at least 4 bins")
    rows = np.arange(bins.shape[0])
    s_bar = (peaks + n_fft // 2) % n_fft
    ms = _mags(bins[rows, peaks])
    pooled = np.zeros_like(ms)
    for off in (-1, 0, 1):
        pooled += _mags(bins[rows, (s_bar + off) % n_fft]) ** 2
    root = np.sqrt(pooled)
    return np.log(root / ms) + (ms**2 - pooled) / (2.0 * sigma2)


def llr_leakage(obs: SymbolObservation, sigma2: float) -> float:
    return float(llr_leakage_many(obs.bins[None, :], [obs.excitation_peak], sigma2)[0])


def llr_conventional_many(bins, peaks, sigma2: float, p_hat: float) -> np.ndarray:
    """Power-based baseline: Rician-vs-Rayleigh log-ratio at estimated power.

    L = ln I0(|f_s| sqrt(p_hat) / sigma^2) - ln I0(|f_sbar| sqrt(p_hat) / sigma^2).
    Collapses to 0 when p_hat = 0 and degrades as p_hat drifts from the true
    power the estimator cannot observe.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    if p_hat < 0:
        raise ValueError("p_hat must be >= 0")
    bins = np.atleast_2d(np.asarray(bins))
    peaks = np.atleast_1d(np.asarray(peaks, dtype=np.int64))
    n_fft = bins.shape[1]
    rows = np.arange(bins.shape[0])
    s_bar = (peaks + n_fft // 2) % n_fft
    nu = np.sqrt(p_hat)
    xs = _mags(bins[rows, peaks]) * nu / sigma2
    xb = _mags(bins[rows, s_bar]) * nu / sigma2
    # ln I0(x) = ln(i0e(x)) + x, stable for large arguments
    return (np.log(i0e(xs)) + xs) - (np.log(i0e(xb)) + xb)


def llr_conventional(obs: SymbolObservation, sigma2: float, p_hat: float) -> float:
    return float(llr_conventional_many(obs.bins[None, :], [obs.excitation_peak], sigma2, p_hat)[0])

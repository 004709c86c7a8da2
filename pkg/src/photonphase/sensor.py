"""Photon-limited EM-CCD detection.

Per pixel, independently: photon arrivals are Poisson with the pixel's mean
photon count over the exposure; each photon becomes a photoelectron with
probability equal to the quantum efficiency (binomial thinning, which keeps
integer electron statistics while matching the mean Q * photons); the
electron count is amplified by preamp and EM gain with a multiplicative
normal fluctuation of the EM register (mean 1), dark noise and an offset
are added, and the result is rounded and clipped to the ADC range.

Everything is driven by the counter-based generator keyed
(seed, pixel_row, pixel_col, frame_index), so detection is bit-reproducible
at any degree of parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .errors import InsufficientFrames, NegativeIntensity

__all__ = [
    "SensorConfig",
    "PhotonBudget",
    "NOISE_LEVELS",
    "default_dark_noise",
    "detect",
    "counts_to_photons",
    "saturation_fraction",
    "photoelectrons_per_pixel",
    "SnrEstimate",
    "measured_snr",
    "spatial_snr",
]

# Bench noise levels: photoelectrons per pixel and EM gain per experiment id.
NOISE_LEVELS = {
    1: (1050.0, 1.0),
    2: (85.0, 1.0),
    3: (44.0, 1.0),
    4: (9.9, 4.8),
    5: (1.1, 54.0),
    6: (0.25, 54.0),
}


def default_dark_noise(em_gain: float) -> float:
    """Dark-noise sigma (counts) by EM-gain regime.

    Placeholder magnitudes: the bench measured dark noise per gain setting
    but the numbers are not published, so these are declared assumptions.
    """
    if em_gain < 2.0:
        return 2.0
    if em_gain < 20.0:
        return 4.0
    return 10.0


@dataclass(frozen=True)
class SensorConfig:
    """All stochastic-detection parameters.

    ``dark_noise_sigma=None`` selects :func:`default_dark_noise` for the
    configured EM gain.
    """

    quantum_efficiency: float = 0.6
    integration_time: float = 2e-3
    preamp_gain: float = 1.0
    em_gain: float = 1.0
    excess_noise_sigma: float = 0.3
    dark_noise_sigma: float | None = None
    offset: float = 100.0
    bit_depth: int = 14
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.quantum_efficiency <= 1.0):
            raise ValueError("quantum efficiency must be in (0, 1]")
        if not (self.integration_time > 0):
            raise ValueError("integration time must be positive")
        if self.em_gain < 1.0:
            raise ValueError("EM gain must be >= 1")
        if self.excess_noise_sigma < 0 or (self.dark_noise_sigma or 0) < 0:
            raise ValueError("noise sigmas must be non-negative")
        if not (1 <= self.bit_depth <= 16):
            raise ValueError("bit depth must be in [1, 16]")

    @property
    def dark_sigma(self) -> float:
        if self.dark_noise_sigma is None:
            return default_dark_noise(self.em_gain)
        return self.dark_noise_sigma

    @property
    def max_count(self) -> int:
        return (1 << self.bit_depth) - 1

    @classmethod
    def ideal(cls, seed: int = 0) -> "SensorConfig":
        """Noiseless electronics: unit QE and gains, no excess/dark noise,
        zero offset.  Only shot noise survives."""
        return cls(quantum_efficiency=1.0, em_gain=1.0, excess_noise_sigma=0.0,
                   dark_noise_sigma=0.0, offset=0.0, bit_depth=16, seed=seed)

    def with_seed(self, seed: int) -> "SensorConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class PhotonBudget:
    """Power bookkeeping between the monitor photodiode and the detector."""

    total_beam_power: float
    filter_attenuation: float = 1.0
    l4_loss: float = 0.015
    capture_fraction: float = 0.69
    photon_energy: float = 3.139e-19
    pixel_count: int = 1_006_008

    def __post_init__(self):
        for name in ("total_beam_power", "filter_attenuation", "capture_fraction",
                     "photon_energy", "pixel_count"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if not (0.0 <= self.l4_loss < 1.0):
            raise ValueError("l4_loss must be a fraction in [0, 1)")


def photoelectrons_per_pixel(budget: PhotonBudget, cfg: SensorConfig) -> float:
    """Mean photoelectrons per pixel per exposure implied by a beam power."""
    power = budget.total_beam_power * (1.0 - budget.l4_loss) * budget.capture_fraction
    photons = power * cfg.integration_time / budget.photon_energy
    return photons * cfg.quantum_efficiency / budget.pixel_count


def detect(ideal_intensity: np.ndarray, cfg: SensorConfig, frame: int = 0) -> np.ndarray:
    """Convert mean-photons-per-pixel intensity into digital counts.

    ``ideal_intensity`` must already be normalised so each pixel value is
    the mean photon count over one exposure.  Returns uint16 counts clipped
    to the ADC range.  Deterministic given (cfg.seed, frame, pixel index).
    """
    lam = np.asarray(ideal_intensity, dtype=np.float64)
    if (lam < 0).any():
        raise NegativeIntensity("ideal intensity has negative pixels")
    photons = rng.poisson(lam, cfg.seed, frame)
    if cfg.quantum_efficiency >= 1.0:
        electrons = photons
    else:
        electrons = rng.binomial(photons, cfg.quantum_efficiency, cfg.seed, frame)
    signal = electrons.astype(np.float64)
    gain = cfg.preamp_gain * cfg.em_gain
    if cfg.excess_noise_sigma > 0 or cfg.dark_sigma > 0:
        z_gain, z_dark = rng.normal_pair(lam.shape, cfg.seed, frame)
        fluct = 1.0 + cfg.excess_noise_sigma * z_gain if cfg.excess_noise_sigma > 0 else 1.0
        signal = gain * fluct * signal
        if cfg.dark_sigma > 0:
            signal = signal + cfg.dark_sigma * z_dark
    else:
        signal = gain * signal
    signal = signal + cfg.offset
    counts = np.clip(np.rint(signal), 0, cfg.max_count)
    return counts.astype(np.uint16)


def counts_to_photons(counts: np.ndarray, cfg: SensorConfig) -> np.ndarray:
    """Invert the mean detection chain: subtract the offset, floor at zero,
    divide by the gains and the quantum efficiency."""
    lifted = np.maximum(np.asarray(counts, dtype=np.float64) - cfg.offset, 0.0)
    return lifted / (cfg.preamp_gain * cfg.em_gain * cfg.quantum_efficiency)


def saturation_fraction(counts: np.ndarray, cfg: SensorConfig) -> float:
    """Diagnostic: fraction of pixels pinned at the ADC ceiling."""
    return float(np.mean(np.asarray(counts) >= cfg.max_count))


@dataclass(frozen=True)
class SnrEstimate:
    snr: float
    degenerate: bool = False


def measured_snr(frames, offset: float = 0.0) -> SnrEstimate:
    """Temporal SNR: per-pixel mean over std across frames, averaged over
    the field of view.  Identical frames give infinite SNR, flagged
    degenerate rather than raised."""
    stack = np.asarray(frames, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 2:
        raise InsufficientFrames("need at least 2 frames of identical geometry")
    stack = stack - offset
    mean = stack.mean(axis=0)
    std = stack.std(axis=0, ddof=1)
    valid = std > 0
    if not valid.any():
        return SnrEstimate(float("inf"), degenerate=True)
    return SnrEstimate(float(np.mean(mean[valid] / std[valid])), degenerate=False)


def spatial_snr(frame: np.ndarray, offset: float = 0.0) -> SnrEstimate:
    """Single-frame variant: mean over std across the pixels of a flat
    region.  Quick check used by the noise-level sweeps."""
    values = np.asarray(frame, dtype=np.float64) - offset
    std = values.std(ddof=1)
    if std == 0:
        return SnrEstimate(float("inf"), degenerate=True)
    return SnrEstimate(float(values.mean() / std), degenerate=False)

"""Illumination beam and SLM transmittance models.

The bench illuminates the SLM with the central lobe of an Airy-like pattern,
modelled as intensity J0^2(a0 r / R) inside the first zero and nothing
outside (the outer rings are blocked by a hard aperture).  The SLM maps
8-bit gray levels to a phase shift and a residual intensity ratio through
per-level lookup tables.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import CalibrationMissing, GeometryMismatch
from .field import ComplexField
from .geometry import HENE_WAVELENGTH, Geometry

__all__ = [
    "BESSEL_J0_FIRST_ZERO",
    "BeamModel",
    "incident_field",
    "capture_fraction",
    "SlmCalibration",
    "slm_transmittance",
    "object_field",
    "ground_truth_phase",
]

BESSEL_J0_FIRST_ZERO = 2.404825557695773


@dataclass(frozen=True)
class BeamModel:
    """Incident beam in the image plane.

    profile "bessel": amplitude J0(a0 r / R) for r <= R, 0 outside.
    profile "flat": uniform amplitude (unit tests and idealised runs).
    """

    profile: str = "bessel"
    radius: float = 8.5e-3
    peak_amplitude: float = 1.0
    j0_first_zero: float = BESSEL_J0_FIRST_ZERO

    def __post_init__(self):
        if self.profile not in ("bessel", "flat"):
            raise GeometryMismatch(f"unknown beam profile {self.profile!r}")
        if not (self.radius > 0):
            raise GeometryMismatch("beam radius must be positive")
        if not (2.40 < self.j0_first_zero < 2.41):
            raise GeometryMismatch("j0_first_zero out of range")


def incident_field(beam: BeamModel, grid_shape, pitch: float,
                   wavelength: float = HENE_WAVELENGTH, center=None) -> ComplexField:
    """Sample the beam amplitude on a centred grid; zero phase.

    The grid may be a central crop of the aperture.  The beam axis sits at
    grid index ``center`` (row, col), by default the geometric centre
    (n-1)/2, which makes the sampled field exactly point-symmetric.
    """
    if not (pitch > 0):
        raise GeometryMismatch("pitch must be positive")
    if np.isscalar(grid_shape):
        grid_shape = (int(grid_shape), int(grid_shape))
    rows, cols = grid_shape
    if center is None:
        center = ((rows - 1) / 2.0, (cols - 1) / 2.0)
    y = (np.arange(rows) - center[0]) * pitch
    x = (np.arange(cols) - center[1]) * pitch
    if beam.profile == "flat":
        amp = np.full((rows, cols), beam.peak_amplitude, dtype=np.float64)
    else:
        r = np.hypot(x[None, :], y[:, None])
        arg = beam.j0_first_zero * r / beam.radius
        amp = beam.peak_amplitude * np.where(r <= beam.radius, special.j0(arg), 0.0)
    return ComplexField(amp.astype(np.complex128), pitch, wavelength)


def capture_fraction(beam: BeamModel, width: float, height: float) -> float:
    """Fraction of total beam power falling inside a centred width x height
    rectangle, by radial quadrature of the J0^2 profile."""
    if beam.profile == "flat":
        raise GeometryMismatch("capture fraction is defined for the bessel profile")
    a0, R = beam.j0_first_zero, beam.radius
    hx, hy = width / 2.0, height / 2.0

    def _theta(r):
        th = 2.0 * np.pi
        if r > hy:
            th -= 4.0 * np.arccos(hy / r)
        if r > hx:
            th -= 4.0 * np.arccos(hx / r)
        return th

    def _integrand(r):
        return special.j0(a0 * r / R) ** 2 * r * _theta(r)

    diag = min(np.hypot(hx, hy), R)
    inner = min(hx, hy, R)
    total = np.pi * R**2 * special.j1(a0) ** 2
    num, _ = integrate.quad(_integrand, 0.0, inner, limit=200)
    if diag > inner:
        pts = sorted(p for p in (hx, hy) if inner < p < diag)
        num2, _ = integrate.quad(_integrand, inner, diag, limit=200, points=pts or None)
        num += num2
    return num / total


@dataclass(frozen=True)
class SlmCalibration:
    """Gray level -> (phase shift, intensity ratio) lookup tables.

    ``amplitude`` entries are intensity ratios; the complex transmittance of
    level v is sqrt(amplitude[v]) * exp(1j * phase[v]).  Gray level 0 is the
    reference: phase[0] == 0 and amplitude[0] == 1.
    """

    phase: np.ndarray
    amplitude: np.ndarray
    smoothing_window: int = 9

    def __post_init__(self):
        phase = np.asarray(self.phase, dtype=np.float64)
        amplitude = np.asarray(self.amplitude, dtype=np.float64)
        if phase.shape != (256,) or amplitude.shape != (256,):
            raise CalibrationMissing("calibration tables must have exactly 256 entries")
        if (amplitude < 0).any():
            raise CalibrationMissing("intensity ratios must be non-negative")
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "amplitude", amplitude)

    @classmethod
    def default(cls, ripple_depth: float = 0.0) -> "SlmCalibration":
        """Synthetic calibration: linear phase 0..2pi over gray 0..255, unit
        intensity ratio, optionally with a sinusoidal residual-modulation
        ripple of the given depth."""
        g = np.arange(256, dtype=np.float64)
        phase = g * (2.0 * np.pi / 255.0)
        amplitude = 1.0 - ripple_depth * np.sin(np.pi * g / 255.0) ** 2
        return cls(phase, amplitude)

    @classmethod
    def from_file(cls, path, smooth: bool = True, window: int = 9) -> "SlmCalibration":
        """Read a measured table: 256 lines of `gray phase amplitude`,
        ascending gray levels.  Smoothing (moving average) is applied to the
        raw columns and the result re-referenced to gray level 0."""
        if not os.path.exists(path):
            raise CalibrationMissing(f"calibration file not found: {path}")
        raw = np.loadtxt(path)
        if raw.shape != (256, 3):
            raise CalibrationMissing(f"expected 256 rows of 3 columns in {path}, got {raw.shape}")
        if not np.array_equal(raw[:, 0], np.arange(256)):
            raise CalibrationMissing("gray levels must be 0..255 in ascending order")
        cal = cls(raw[:, 1], raw[:, 2], smoothing_window=window)
        return cal.smoothed(window) if smooth else cal

    def smoothed(self, window: int | None = None) -> "SlmCalibration":
        """Centred moving average (window clamped at the table ends), then
        re-referenced so level 0 keeps phase 0 and intensity ratio 1."""
        w = self.smoothing_window if window is None else window
        if w < 1 or w % 2 == 0:
            raise CalibrationMissing("smoothing window must be a positive odd integer")
        phase = _moving_average(self.phase, w)
        amplitude = _moving_average(self.amplitude, w)
        phase = phase - phase[0]
        if amplitude[0] <= 0:
            raise CalibrationMissing("reference intensity ratio is zero after smoothing")
        amplitude = amplitude / amplitude[0]
        return SlmCalibration(phase, amplitude, smoothing_window=w)

    def save(self, path) -> None:
        rows = np.column_stack([np.arange(256), self.phase, self.amplitude])
        np.savetxt(path, rows, fmt=["%d", "%.9f", "%.9f"])


def _moving_average(values: np.ndarray, window: int) -> np.ndarray:
    half = window // 2
    out = np.empty_like(values)
    n = len(values)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + half + 1)
        out[i] = values[lo:hi].mean()
    return out


def slm_transmittance(gray_image: np.ndarray, cal: SlmCalibration,
                      pure_phase: bool = False) -> np.ndarray:
    """Complex transmittance of a displayed 8-bit image, per-pixel lookup.

    With ``pure_phase`` the residual intensity modulation is ignored and the
    modulus forced to 1.
    """
    if cal is None:
        raise CalibrationMissing("no SLM calibration loaded")
    gray = np.asarray(gray_image)
    if gray.min() < 0 or gray.max() > 255:
        raise CalibrationMissing("gray values must lie in [0, 255]")
    idx = gray.astype(np.intp)
    modulus = 1.0 if pure_phase else np.sqrt(cal.amplitude[idx])
    return modulus * np.exp(1j * cal.phase[idx])


def ground_truth_phase(gray_image: np.ndarray, cal: SlmCalibration) -> np.ndarray:
    """Displayed phase in radians, wrapped to (-pi, pi]."""
    phase = cal.phase[np.asarray(gray_image).astype(np.intp)]
    return wrap_phase(phase)


def wrap_phase(phase: np.ndarray) -> np.ndarray:
    """Wrap radians to (-pi, pi]."""
    wrapped = np.mod(-np.asarray(phase) + np.pi, 2.0 * np.pi)
    return np.pi - wrapped


def _resample_complex(values: np.ndarray, in_pitch: float, out_pitch: float,
                      out_size: int) -> np.ndarray:
    """Bilinear resampling of a complex grid, centres aligned, real and
    imaginary parts interpolated independently."""
    from scipy.ndimage import map_coordinates

    n_in = values.shape[0]
    out = (np.arange(out_size) - (out_size - 1) / 2.0) * out_pitch
    coords = out / in_pitch + (n_in - 1) / 2.0
    cc, rr = np.meshgrid(coords, coords)
    stack = np.array([rr, cc])
    real = map_coordinates(values.real, stack, order=1, mode="nearest")
    imag = map_coordinates(values.imag, stack, order=1, mode="nearest")
    return real + 1j * imag


def object_field(gray_image: np.ndarray, cal: SlmCalibration, beam: BeamModel,
                 geometry: Geometry, pure_phase: bool = False) -> ComplexField:
    """Object-plane field on the detector grid: incident beam times the
    displayed transmittance, demagnified onto the simulation pitch.

    The displayed image occupies ``geometry.object_pixels`` square at the
    object pitch; outside it the SLM sits at the gray-0 reference level.
    """
    gray = np.asarray(gray_image)
    n = geometry.object_pixels
    if gray.shape != (n, n):
        raise GeometryMismatch(f"object image must be {n}x{n}, got {gray.shape}")
    t = slm_transmittance(gray, cal, pure_phase=pure_phase)
    t_det = _resample_complex(t, geometry.object_pitch, geometry.det_pitch,
                              geometry.object_det_pixels)
    reference = slm_transmittance(np.zeros((1, 1), dtype=np.uint8), cal,
                                  pure_phase=pure_phase)[0, 0]
    rows, cols = geometry.det_shape
    full = np.full((rows, cols), reference, dtype=np.complex128)
    r0 = (rows - t_det.shape[0]) // 2
    c0 = (cols - t_det.shape[1]) // 2
    full[r0 : r0 + t_det.shape[0], c0 : c0 + t_det.shape[1]] = t_det
    inc = incident_field(beam, geometry.det_shape, geometry.det_pitch, geometry.wavelength)
    return inc.with_data(inc.data * full)

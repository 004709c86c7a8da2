"""Classical phase reconstruction: Gerchberg-Saxton and its half-iteration.

Both reconstructors run between two lattices coupled by the single-transform
Fresnel pair: the object lattice (``approximant_pad`` square at the exact
object-plane pitch) and the detector lattice (same grid size at the detector
pitch).  The pair is exactly unitary and mutually inverse, so alternating
projections are well conditioned, and the approximant is by construction the
object-plane phase after exactly half of the first iteration: the two
operations share the same propagation and projection code.

Amplitude projections use the measured amplitude inside the detector window
and zero outside it (the camera saw nothing there), matching the zero-padded
inverse propagation that defines the approximant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam import wrap_phase
from .errors import NegativeIntensity
from .field import SINGLE_TRANSFORM, ComplexField, PropagationPlan, propagate
from .geometry import Geometry

__all__ = ["GsResult", "Approximant", "gs_reconstruct", "gs_approximant",
           "object_plane_grid"]


@dataclass(frozen=True)
class GsResult:
    """Outcome of a Gerchberg-Saxton run.

    ``phase`` is the object-region crop, background-referenced and wrapped;
    ``residual_history`` holds the relative RMS detector-plane amplitude
    mismatch at the start of each iteration (non-increasing on consistent
    noiseless data).
    """

    phase: np.ndarray
    residual_history: np.ndarray
    iterations_run: int
    converged: bool
    degenerate: bool = False


@dataclass(frozen=True)
class Approximant:
    """Object-plane phase from half a GS iteration, wrapped to (-pi, pi]."""

    phase: np.ndarray


def object_plane_grid(geometry: Geometry):
    """(grid side, pitch) of the reconstruction object lattice."""
    return geometry.approximant_pad, geometry.approximant_pitch


def lattice_center(geometry: Geometry):
    """(row, col) lattice index of the optical axis.

    The measurement window is embedded at integer offsets, so the axis can
    land between samples; beam sampling, the propagation chirps and the
    output crop all share this one reference point.
    """
    n = geometry.approximant_pad
    rows, cols = geometry.det_shape
    return (
        (n - rows) // 2 + (rows - 1) / 2.0,
        (n - cols) // 2 + (cols - 1) / 2.0,
    )


def _object_box(geometry: Geometry):
    """Integer (row, col) start of the object crop about the lattice axis.

    Integral because detector sides and object size are even (enforced by
    Geometry), so the axis offset and the crop half-width are both
    half-integers.
    """
    cy, cx = lattice_center(geometry)
    half = (geometry.object_pixels - 1) / 2.0
    return int(round(cy - half)), int(round(cx - half))


def _forward_plan(geometry: Geometry) -> PropagationPlan:
    return PropagationPlan(geometry.distance, geometry.approximant_pad,
                           SINGLE_TRANSFORM, lattice_center(geometry))


def _backward_plan(geometry: Geometry) -> PropagationPlan:
    return PropagationPlan(-geometry.distance, geometry.approximant_pad,
                           SINGLE_TRANSFORM, lattice_center(geometry))


def _padded_sqrt_measurement(measurement: np.ndarray, geometry: Geometry) -> np.ndarray:
    meas = np.asarray(measurement, dtype=np.float64)
    if (meas < 0).any():
        raise NegativeIntensity("measurement has negative pixels")
    n = geometry.approximant_pad
    rows, cols = meas.shape
    out = np.zeros((n, n), dtype=np.float64)
    r0 = (n - rows) // 2
    c0 = (n - cols) // 2
    out[r0 : r0 + rows, c0 : c0 + cols] = np.sqrt(meas)
    return out


def _apply_amplitude(field_data: np.ndarray, amplitude: np.ndarray,
                     modulus: np.ndarray | None = None) -> np.ndarray:
    """Replace |field| by ``amplitude``, keeping the phase.

    Computed as field * (amplitude / |field|), which avoids two
    transcendental passes; pixels with zero modulus take the target
    amplitude at zero phase, matching amplitude * exp(1j * angle(0)).
    """
    if modulus is None:
        modulus = np.abs(field_data)
    zero = modulus == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = amplitude / modulus
        out = field_data * ratio
    if zero.any():
        out[zero] = amplitude[zero] if np.ndim(amplitude) else amplitude
    return out


def _half_iteration(obj: ComplexField, sqrt_meas: np.ndarray, fwd: PropagationPlan,
                    back: PropagationPlan):
    """Forward leg, measurement projection, backward leg.

    Returns the back-propagated object-plane field and the detector-plane
    residual before the projection.
    """
    det = propagate(obj, fwd)
    modulus = np.abs(det.data)
    norm = np.linalg.norm(sqrt_meas)
    residual = np.linalg.norm(modulus - sqrt_meas) / norm
    projected = det.with_data(_apply_amplitude(det.data, sqrt_meas, modulus))
    return propagate(projected, back), residual


def _background_mask(incident: ComplexField, geometry: Geometry) -> np.ndarray:
    amp = np.abs(incident.data)
    mask = amp > 0.05 * amp.max()
    r0, c0 = _object_box(geometry)
    s = geometry.object_pixels
    mask[r0 : r0 + s, c0 : c0 + s] = False
    return mask


def _reference_phase(phase: np.ndarray, background: np.ndarray) -> np.ndarray:
    """Shift so the median background phase is zero, robustly to wrapping:
    the background is first centred by its circular mean, then the linear
    median of the centred values completes the reference."""
    if not background.any():
        return wrap_phase(phase)
    bg = phase[background]
    circ_mean = np.angle(np.mean(np.exp(1j * bg)))
    med = np.median(wrap_phase(bg - circ_mean))
    return wrap_phase(phase - (circ_mean + med))


def _finish_phase(obj_data: np.ndarray, incident: ComplexField, geometry: Geometry) -> np.ndarray:
    phase = np.angle(obj_data)
    phase = _reference_phase(phase, _background_mask(incident, geometry))
    r0, c0 = _object_box(geometry)
    s = geometry.object_pixels
    return phase[r0 : r0 + s, c0 : c0 + s]


def gs_approximant(measurement: np.ndarray, incident: ComplexField,
                   geometry: Geometry) -> Approximant:
    """Half of the first GS iteration.

    The detector field sqrt(measurement) * exp(j * angle(propagated
    incident)) is zero-padded to the single-transform grid and inverse
    propagated; the resulting object-plane phase is background-referenced
    and cropped to the object region.
    """
    sqrt_meas = _padded_sqrt_measurement(measurement, geometry)
    obj, _ = _half_iteration(incident, sqrt_meas, _forward_plan(geometry),
                             _backward_plan(geometry))
    return Approximant(_finish_phase(obj.data, incident, geometry))


def gs_reconstruct(measurement: np.ndarray, incident: ComplexField, geometry: Geometry,
                   max_iter: int = 100, tol: float = 1e-6,
                   single_precision: bool = False) -> GsResult:
    """Alternating projections between the incident-beam amplitude in the
    object plane and the measured amplitude in the detector plane.

    Stops at ``max_iter`` or when the relative change of the residual drops
    below ``tol``.  An all-dark measurement returns a degenerate result
    instead of raising.  ``single_precision`` runs the iteration in
    complex64, halving time and memory at paper-scale grids; phase noise
    stays around 1e-7 rad.
    """
    sqrt_meas = _padded_sqrt_measurement(measurement, geometry)
    if not (sqrt_meas > 0).any():
        zero_phase = np.zeros((geometry.object_pixels, geometry.object_pixels))
        return GsResult(zero_phase, np.array([]), 0, converged=False, degenerate=True)
    if single_precision:
        sqrt_meas = sqrt_meas.astype(np.float32)
        incident = incident.with_data(incident.data.astype(np.complex64))
    fwd = _forward_plan(geometry)
    back = _backward_plan(geometry)
    obj_amplitude = np.abs(incident.data)
    current = incident
    back_field = incident
    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        back_field, residual = _half_iteration(current, sqrt_meas, fwd, back)
        history.append(residual)
        # the object projection only replaces the amplitude, so the reported
        # phase is that of the back-propagated field itself
        current = back_field.with_data(_apply_amplitude(back_field.data, obj_amplitude))
        if len(history) > 1:
            drop = history[-2] - history[-1]
            if abs(drop) < tol * max(history[-1], np.finfo(float).tiny):
                converged = True
                break
    phase = _finish_phase(back_field.data, incident, geometry)
    return GsResult(phase, np.asarray(history), iterations, converged)

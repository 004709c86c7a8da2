"""Optical geometry shared by the forward model and the reconstructors."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import GeometryMismatch
from .field import min_padded_size, next_pow2

__all__ = ["Geometry", "image_plane_pitch"]

HENE_WAVELENGTH = 632.8e-9
SLM_PITCH = 36e-6
TELESCOPE_DEMAG = 2.3


def image_plane_pitch(slm_pitch: float = SLM_PITCH, demag: float = TELESCOPE_DEMAG) -> float:
    """Pitch of one SLM pixel after telescope demagnification."""
    return slm_pitch / demag


@dataclass(frozen=True)
class Geometry:
    """Grids and distances of the bench.

    ``object_pitch`` is the nominal image-plane pitch chosen so the object
    spans an integer number of detector pixels; the physical
    ``image_plane_pitch()`` (SLM pitch over demagnification) differs from it
    by 0.2%, i.e. sub-pixel over the whole object.
    """

    wavelength: float = HENE_WAVELENGTH
    distance: float = 0.4
    det_pitch: float = 8e-6
    det_shape: tuple = (1004, 1002)
    object_pixels: int = 256
    object_pitch: float = 15.625e-6

    def __post_init__(self):
        if min(self.det_shape) < 2 or self.object_pixels < 2:
            raise GeometryMismatch("grids must have at least 2 pixels per side")
        if any(s % 2 for s in self.det_shape) or self.object_pixels % 2:
            # even sides keep the embedded window, the optical axis and the
            # object crop mutually aligned on the reconstruction lattice
            raise GeometryMismatch("detector sides and object size must be even")
        for name in ("wavelength", "distance", "det_pitch", "object_pitch"):
            if not (getattr(self, name) > 0):
                raise GeometryMismatch(f"{name} must be positive")
        if self.approximant_pad < max(self.det_shape):
            raise GeometryMismatch(
                "detector grid does not fit the single-transform pad "
                f"({self.approximant_pad} < {max(self.det_shape)}); "
                "increase distance or object_pitch"
            )

    @property
    def object_extent(self) -> float:
        return self.object_pixels * self.object_pitch

    @property
    def object_det_pixels(self) -> int:
        """Side of the object footprint resampled onto the detector grid."""
        return int(round(self.object_extent / self.det_pitch))

    @property
    def approximant_pad(self) -> int:
        """Zero-pad of the detector grid such that single-transform inverse
        propagation lands on (approximately) the object pitch."""
        return int(round(self.wavelength * abs(self.distance)
                         / (self.object_pitch * self.det_pitch)))

    @property
    def approximant_pitch(self) -> float:
        """Exact object-plane pitch realised by the single-transform pad."""
        return self.wavelength * abs(self.distance) / (self.approximant_pad * self.det_pitch)

    @property
    def tf_pad(self) -> int:
        """Power-of-two pad for transfer-function propagation over ``distance``."""
        need = max(min_padded_size(self.wavelength, self.distance, self.det_pitch),
                   max(self.det_shape))
        return next_pow2(need)

    @classmethod
    def paper(cls) -> "Geometry":
        """Bench-scale geometry: 1004x1002 detector at 8 um, 400 mm throw."""
        return cls()

    @classmethod
    def desk(cls) -> "Geometry":
        """Reduced geometry for fast runs: 64^2 objects, 252x250 detector.

        The distance is chosen so the single-transform lattice (500) leaves
        the same ~2x margin around the detector window as the bench
        geometry, keeping grid wrap-around out of the window.
        """
        return cls(distance=0.1012, det_shape=(252, 250), object_pixels=64,
                   object_pitch=16e-6)

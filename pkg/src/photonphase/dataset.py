"""Example-set generation, the PRD1 array format and dataset manifests.

A dataset directory holds one manifest (YAML) and one PRD1 array file per
(split, role).  PRD1 is deliberately trivial to read from any language:

    bytes 0..3   magic "PRD1"
    then little-endian uint32 fields: rank, dims..., dtype code
    then row-major little-endian data (code 0 = float32, 1 = uint16)

The manifest records every physical constant, sensor parameter and seed, so
a dataset is regenerable bit-for-bit; per-array SHA-256 checksums make the
round trip verifiable.
"""

from __future__ import annotations

import hashlib
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np
import yaml

from .beam import BeamModel, SlmCalibration, ground_truth_phase, incident_field, object_field
from .errors import ChecksumMismatch, DataError, GeometryMismatch, SplitMissing
from .field import ComplexField, PropagationPlan, crop_center, intensity, propagate
from .geometry import Geometry
from .objects import synth_object
from .retrieval import gs_approximant, lattice_center, object_plane_grid
from .sensor import NOISE_LEVELS, SensorConfig, counts_to_photons, detect

__all__ = [
    "MAGIC",
    "write_prd",
    "read_prd",
    "prd_data_offset",
    "resample_for_end_to_end",
    "DatasetContext",
    "generate_example",
    "build_dataset",
    "Dataset",
    "load_dataset",
    "SPLITS",
    "ROLES",
]

MAGIC = b"PRD1"
_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<u2")}
_CODE_OF = {np.dtype("<f4"): 0, np.dtype("<u2"): 1}

SPLITS = ("train", "validation", "test")
# truth: displayed phase; meas: raw detector counts; approx: half-iteration
# phase; measlow: raw counts resampled to the object resolution
ROLES = ("truth", "meas", "approx", "measlow")


def write_prd(path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    dtype = np.dtype("<f4") if arr.dtype.kind == "f" else np.dtype("<u2")
    if arr.dtype.kind not in ("f", "u", "i"):
        raise DataError(f"unsupported dtype {arr.dtype}")
    arr = arr.astype(dtype)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", arr.ndim))
        for dim in arr.shape:
            fh.write(struct.pack("<I", dim))
        fh.write(struct.pack("<I", _CODE_OF[dtype]))
        fh.write(arr.tobytes())


def read_prd(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise DataError(f"{path}: bad magic, not a PRD1 file")
        (rank,) = struct.unpack("<I", fh.read(4))
        if rank < 1 or rank > 8:
            raise DataError(f"{path}: implausible rank {rank}")
        dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
        (code,) = struct.unpack("<I", fh.read(4))
        if code not in _DTYPE_CODES:
            raise DataError(f"{path}: unknown dtype code {code}")
        dtype = _DTYPE_CODES[code]
        data = fh.read()
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(data) != expected:
        raise DataError(f"{path}: payload is {len(data)} bytes, expected {expected}")
    return np.frombuffer(data, dtype=dtype).reshape(dims)


def prd_data_offset(rank: int) -> int:
    """Byte offset of the data section: magic + rank + dims + dtype code."""
    return 4 + 4 * (1 + rank + 1)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def resample_for_end_to_end(measurement: np.ndarray, out_size: int = 256) -> np.ndarray:
    """Central square crop of the detector image, then bilinear interpolation
    down to the object resolution."""
    from scipy.ndimage import map_coordinates

    meas = np.asarray(measurement, dtype=np.float64)
    if meas.ndim != 2:
        raise GeometryMismatch("measurement must be a 2-D image")
    side = min(meas.shape)
    square = crop_center(meas, (side, side))
    coords = (np.arange(out_size) + 0.5) * side / out_size - 0.5
    cc, rr = np.meshgrid(coords, coords)
    out = map_coordinates(square, np.array([rr, cc]), order=1, mode="nearest")
    return out.astype(np.float32)


@dataclass(frozen=True)
class DatasetContext:
    """Everything one example generation needs, precomputed once."""

    geometry: Geometry
    beam: BeamModel
    cal: SlmCalibration
    sensor: SensorConfig
    noise_level: int
    object_class: str
    seed: int
    pure_phase: bool = True
    photon_scale: float = dataclass_field(default=0.0)
    incident_obj: ComplexField = dataclass_field(default=None)

    @classmethod
    def create(cls, geometry: Geometry, beam: BeamModel, cal: SlmCalibration,
               sensor: SensorConfig, noise_level: int, object_class: str,
               seed: int, pure_phase: bool = True) -> "DatasetContext":
        from dataclasses import replace

        photoelectrons, em_gain = NOISE_LEVELS[noise_level]
        sensor = replace(sensor, em_gain=em_gain, seed=seed)
        mean_photons = photoelectrons / sensor.quantum_efficiency
        scale = _photon_scale(geometry, beam, mean_photons)
        incident_obj = _object_plane_incident(geometry, beam, scale)
        return cls(geometry, beam, cal, sensor, noise_level, object_class, seed,
                   pure_phase, scale, incident_obj)

    @property
    def mean_photons(self) -> float:
        return NOISE_LEVELS[self.noise_level][0] / self.sensor.quantum_efficiency


def _detector_intensity(geometry: Geometry, obj: ComplexField) -> np.ndarray:
    plan = PropagationPlan(geometry.distance, geometry.tf_pad)
    det = propagate(obj, plan)
    return crop_center(intensity(det), geometry.det_shape)


def _photon_scale(geometry: Geometry, beam: BeamModel, mean_photons: float) -> float:
    """Normalisation constant: the unmodulated beam must average
    ``mean_photons`` per detector pixel."""
    inc = incident_field(beam, geometry.det_shape, geometry.det_pitch, geometry.wavelength)
    reference = _detector_intensity(geometry, inc)
    return mean_photons / float(reference.mean())


def _object_plane_incident(geometry: Geometry, beam: BeamModel, photon_scale: float) -> ComplexField:
    """Incident beam on the reconstruction lattice, limited to the simulated
    window aperture and scaled to the dataset photon normalisation."""
    n, pitch = object_plane_grid(geometry)
    center = lattice_center(geometry)
    inc = incident_field(beam, (n, n), pitch, geometry.wavelength, center=center)
    rows, cols = geometry.det_shape
    y = (np.arange(n) - center[0]) * pitch
    x = (np.arange(n) - center[1]) * pitch
    window = (np.abs(y[:, None]) <= rows * geometry.det_pitch / 2.0) & (
        np.abs(x[None, :]) <= cols * geometry.det_pitch / 2.0
    )
    return inc.with_data(inc.data * window * np.sqrt(photon_scale))


def generate_example(object_image: np.ndarray, ctx: DatasetContext, index: int):
    """(ground-truth phase, raw counts, approximant phase, resampled counts)
    for one object image; deterministic in (ctx.seed, index)."""
    truth = ground_truth_phase(object_image, ctx.cal).astype(np.float32)
    obj = object_field(object_image, ctx.cal, ctx.beam, ctx.geometry,
                       pure_phase=ctx.pure_phase)
    photons = _detector_intensity(ctx.geometry, obj) * ctx.photon_scale
    counts = detect(photons, ctx.sensor, frame=index)
    approx = gs_approximant(counts_to_photons(counts, ctx.sensor),
                            ctx.incident_obj, ctx.geometry)
    measlow = resample_for_end_to_end(counts, ctx.geometry.object_pixels)
    return truth, counts, approx.phase.astype(np.float32), measlow


@dataclass
class Dataset:
    path: str
    manifest: dict

    def split_range(self, split: str):
        if split not in self.manifest["splits"]:
            raise SplitMissing(f"split {split!r} not in dataset")
        entry = self.manifest["splits"][split]
        return entry["start"], entry["count"]

    def array(self, split: str, role: str) -> np.ndarray:
        name = f"{split}_{role}"
        for rec in self.manifest["arrays"]:
            if rec["role"] == name:
                return read_prd(os.path.join(self.path, rec["file"]))
        raise SplitMissing(f"array {name!r} not in dataset")

    def geometry(self) -> Geometry:
        g = self.manifest["geometry"]
        return Geometry(
            wavelength=g["wavelength"], distance=g["distance"],
            det_pitch=g["det_pitch"], det_shape=(g["det_rows"], g["det_cols"]),
            object_pixels=g["object_pixels"], object_pitch=g["object_pitch"],
        )

    def sensor(self) -> SensorConfig:
        s = self.manifest["sensor"]
        return SensorConfig(
            quantum_efficiency=s["quantum_efficiency"],
            integration_time=s["integration_time"],
            preamp_gain=s["preamp_gain"], em_gain=s["em_gain"],
            excess_noise_sigma=s["excess_noise_sigma"],
            dark_noise_sigma=s["dark_noise_sigma"], offset=s["offset"],
            bit_depth=s["bit_depth"], seed=s["seed"],
        )

    def beam(self) -> BeamModel:
        b = self.manifest["beam"]
        return BeamModel(profile=b["profile"], radius=b["radius"],
                         peak_amplitude=b["peak_amplitude"])

    def context(self) -> DatasetContext:
        cal = SlmCalibration.default(self.manifest["slm"]["ripple_depth"])
        return DatasetContext.create(
            self.geometry(), self.beam(), cal, self.sensor(),
            self.manifest["noise_level"], self.manifest["objects"]["class"],
            self.manifest["seed"], self.manifest["objects"]["pure_phase"],
        )


def load_dataset(path, verify: bool = False) -> Dataset:
    manifest_path = os.path.join(path, "manifest.yaml")
    if not os.path.exists(manifest_path):
        raise DataError(f"no manifest.yaml under {path}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = yaml.safe_load(fh)
    ds = Dataset(path, manifest)
    if verify:
        for rec in manifest["arrays"]:
            digest = _sha256(os.path.join(path, rec["file"]))
            if digest != rec["sha256"]:
                raise ChecksumMismatch(f"{rec['file']}: checksum mismatch")
    return ds


def build_dataset(out_dir, ctx: DatasetContext, splits: dict, name: str,
                  threads: int = 1, force: bool = False,
                  object_images=None) -> Dataset:
    """Generate and write a complete dataset directory.

    ``splits`` maps split name to example count.  Example ids are assigned
    contiguously (train, validation, test), and generation is keyed by id,
    so the output is identical at any thread count.
    """
    out_dir = str(out_dir)
    if os.path.exists(os.path.join(out_dir, "manifest.yaml")) and not force:
        raise DataError(f"{out_dir} already holds a dataset (use force to overwrite)")
    os.makedirs(os.path.join(out_dir, "arrays"), exist_ok=True)

    counts = {s: int(splits.get(s, 0)) for s in SPLITS}
    starts, cursor = {}, 0
    for s in SPLITS:
        starts[s] = cursor
        cursor += counts[s]
    total = cursor
    if object_images is not None and len(object_images) < total:
        raise DataError(f"need {total} object images, got {len(object_images)}")

    def _example(idx: int):
        if object_images is not None:
            img = object_images[idx]
        else:
            img = synth_object(ctx.object_class, ctx.geometry.object_pixels,
                               ctx.seed, idx)
        return generate_example(img, ctx, idx)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_example, range(total)))
    else:
        results = [_example(i) for i in range(total)]

    arrays = []
    for split in SPLITS:
        if counts[split] == 0:
            continue
        lo, hi = starts[split], starts[split] + counts[split]
        stacks = {
            "truth": np.stack([results[i][0] for i in range(lo, hi)]),
            "meas": np.stack([results[i][1] for i in range(lo, hi)]),
            "approx": np.stack([results[i][2] for i in range(lo, hi)]),
            "measlow": np.stack([results[i][3] for i in range(lo, hi)]),
        }
        for role in ROLES:
            rel = os.path.join("arrays", f"{split}_{role}.prd")
            full = os.path.join(out_dir, rel)
            write_prd(full, stacks[role])
            arr = stacks[role]
            arrays.append({
                "role": f"{split}_{role}",
                "file": rel.replace(os.sep, "/"),
                "shape": [int(d) for d in arr.shape],
                "dtype": "uint16" if role == "meas" else "float32",
                "offset": prd_data_offset(arr.ndim),
                "sha256": _sha256(full),
            })

    g, s, b = ctx.geometry, ctx.sensor, ctx.beam
    manifest = {
        "format": "photonphase-dataset-v1",
        "name": name,
        "seed": ctx.seed,
        "noise_level": ctx.noise_level,
        "photoelectrons": NOISE_LEVELS[ctx.noise_level][0],
        "mean_photons": ctx.mean_photons,
        "photon_scale": ctx.photon_scale,
        "geometry": {
            "wavelength": g.wavelength, "distance": g.distance,
            "det_pitch": g.det_pitch, "det_rows": g.det_shape[0],
            "det_cols": g.det_shape[1], "object_pixels": g.object_pixels,
            "object_pitch": g.object_pitch,
        },
        "sensor": {
            "quantum_efficiency": s.quantum_efficiency,
            "integration_time": s.integration_time,
            "preamp_gain": s.preamp_gain, "em_gain": s.em_gain,
            "excess_noise_sigma": s.excess_noise_sigma,
            "dark_noise_sigma": s.dark_noise_sigma, "offset": s.offset,
            "bit_depth": s.bit_depth, "seed": s.seed,
        },
        "beam": {"profile": b.profile, "radius": b.radius,
                 "peak_amplitude": b.peak_amplitude},
        "slm": {"source": "default", "ripple_depth": 0.0 if ctx.pure_phase else
                _ripple_depth_of(ctx.cal), "pure_phase": ctx.pure_phase},
        "objects": {"class": ctx.object_class, "pure_phase": ctx.pure_phase},
        "splits": {s_: {"start": starts[s_], "count": counts[s_]}
                   for s_ in SPLITS if counts[s_] > 0},
        "arrays": arrays,
    }
    manifest_path = os.path.join(out_dir, "manifest.yaml")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=True)
    return Dataset(out_dir, manifest)


def _ripple_depth_of(cal: SlmCalibration) -> float:
    # depth of the synthetic residual modulation; 0 for pure-phase tables
    return float(1.0 - cal.amplitude.min())

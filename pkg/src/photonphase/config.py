"""Run configuration: one YAML document drives every CLI command."""

from __future__ import annotations

import os
from dataclasses import dataclass

import yaml

from .beam import BeamModel, SlmCalibration
from .errors import ConfigInvalid
from .geometry import Geometry
from .sensor import NOISE_LEVELS, SensorConfig

__all__ = ["RunConfig", "load_config"]

_PRESETS = {
    "paper": {"geometry": Geometry.paper, "splits": {"train": 9500, "validation": 450, "test": 50}},
    "desk": {"geometry": Geometry.desk, "splits": {"train": 500, "validation": 50, "test": 20}},
}


@dataclass
class RunConfig:
    name: str
    out_dir: str
    geometry: Geometry
    beam: BeamModel
    sensor: SensorConfig
    cal: SlmCalibration
    object_class: str
    splits: dict
    noise_levels: list
    seed: int
    pure_phase: bool = True
    reconstruct_method: str = "gs"
    max_iter: int = 100
    tol: float = 1e-6
    report_path: str = "report.tsv"
    plot_path: str | None = None

    def dataset_dir(self, level: int) -> str:
        if len(self.noise_levels) == 1:
            return os.path.join(self.out_dir, self.name)
        return os.path.join(self.out_dir, f"{self.name}-L{level}")


def _subsection(doc, key):
    value = doc.get(key, {})
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigInvalid(f"{key}: expected a mapping")
    return value


def load_config(path) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigInvalid(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: not valid YAML ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigInvalid(f"{path}: top level must be a mapping")

    preset_name = doc.get("preset", "desk")
    if preset_name not in _PRESETS:
        raise ConfigInvalid(f"preset: unknown preset {preset_name!r}")
    preset = _PRESETS[preset_name]

    ds = _subsection(doc, "dataset")
    name = str(ds.get("name", "dataset"))
    out_dir = str(ds.get("out_dir", "datasets"))
    object_class = str(ds.get("class", "ic-layout"))
    if object_class not in ("ic-layout", "natural") and not os.path.isdir(object_class):
        raise ConfigInvalid(
            f"dataset.class: {object_class!r} is neither a known generator nor a directory")
    seed = ds.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigInvalid("dataset.seed: expected an integer")

    splits = dict(preset["splits"])
    for key, value in _subsection(ds, "splits").items():
        if key not in splits:
            raise ConfigInvalid(f"dataset.splits.{key}: unknown split")
        if not isinstance(value, int) or value < 0:
            raise ConfigInvalid(f"dataset.splits.{key}: expected a non-negative integer")
        splits[key] = value

    levels = ds.get("noise_levels", ds.get("noise_level", 3))
    if isinstance(levels, int):
        levels = [levels]
    if (not isinstance(levels, list) or not levels
            or any(lv not in NOISE_LEVELS for lv in levels)):
        raise ConfigInvalid(
            f"dataset.noise_levels: expected ids from {sorted(NOISE_LEVELS)}, got {levels!r}")

    geo_over = _subsection(doc, "geometry")
    geometry = preset["geometry"]()
    if geo_over:
        fields = {
            "wavelength": geometry.wavelength, "distance": geometry.distance,
            "det_pitch": geometry.det_pitch, "det_shape": list(geometry.det_shape),
            "object_pixels": geometry.object_pixels, "object_pitch": geometry.object_pitch,
        }
        for key, value in geo_over.items():
            if key not in fields:
                raise ConfigInvalid(f"geometry.{key}: unknown field")
            fields[key] = value
        try:
            geometry = Geometry(
                wavelength=float(fields["wavelength"]), distance=float(fields["distance"]),
                det_pitch=float(fields["det_pitch"]), det_shape=tuple(fields["det_shape"]),
                object_pixels=int(fields["object_pixels"]),
                object_pitch=float(fields["object_pitch"]))
        except Exception as exc:
            raise ConfigInvalid(f"geometry: {exc}") from exc

    beam_over = _subsection(doc, "beam")
    try:
        beam = BeamModel(
            profile=str(beam_over.get("profile", "bessel")),
            radius=float(beam_over.get("radius", 8.5e-3)),
            peak_amplitude=float(beam_over.get("peak_amplitude", 1.0)))
    except Exception as exc:
        raise ConfigInvalid(f"beam: {exc}") from exc

    sensor_over = _subsection(doc, "sensor")
    defaults = SensorConfig()
    try:
        sensor = SensorConfig(
            quantum_efficiency=float(sensor_over.get("quantum_efficiency",
                                                     defaults.quantum_efficiency)),
            integration_time=float(sensor_over.get("integration_time",
                                                   defaults.integration_time)),
            preamp_gain=float(sensor_over.get("preamp_gain", defaults.preamp_gain)),
            em_gain=float(sensor_over.get("em_gain", defaults.em_gain)),
            excess_noise_sigma=float(sensor_over.get("excess_noise_sigma",
                                                     defaults.excess_noise_sigma)),
            dark_noise_sigma=sensor_over.get("dark_noise_sigma"),
            offset=float(sensor_over.get("offset", defaults.offset)),
            bit_depth=int(sensor_over.get("bit_depth", defaults.bit_depth)),
            seed=seed)
    except ConfigInvalid:
        raise
    except Exception as exc:
        raise ConfigInvalid(f"sensor: {exc}") from exc

    slm = _subsection(doc, "slm")
    pure_phase = bool(slm.get("pure_phase", True))
    if "table" in slm:
        try:
            cal = SlmCalibration.from_file(slm["table"],
                                           window=int(slm.get("smoothing_window", 9)))
        except Exception as exc:
            raise ConfigInvalid(f"slm.table: {exc}") from exc
    else:
        cal = SlmCalibration.default(float(slm.get("ripple_depth", 0.0)))

    rec = _subsection(doc, "reconstruct")
    method = str(rec.get("method", "gs"))
    if method not in ("gs", "approximant"):
        raise ConfigInvalid(f"reconstruct.method: expected gs|approximant, got {method!r}")
    ev = _subsection(doc, "evaluate")

    return RunConfig(
        name=name, out_dir=out_dir, geometry=geometry, beam=beam, sensor=sensor,
        cal=cal, object_class=object_class, splits=splits, noise_levels=levels,
        seed=seed, pure_phase=pure_phase, reconstruct_method=method,
        max_iter=int(rec.get("max_iter", 100)), tol=float(rec.get("tol", 1e-6)),
        report_path=str(ev.get("report", "report.tsv")),
        plot_path=ev.get("plot"))

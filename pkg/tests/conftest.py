import numpy as np
import pytest

from photonphase import BeamModel, ComplexField, Geometry, SensorConfig, SlmCalibration
from photonphase.retrieval import lattice_center


@pytest.fixture(scope="session")
def desk():
    return Geometry.desk()


@pytest.fixture(scope="session")
def paper():
    return Geometry.paper()


@pytest.fixture(scope="session")
def cal():
    return SlmCalibration.default()


@pytest.fixture(scope="session")
def beam():
    return BeamModel()


@pytest.fixture(scope="session")
def sensor():
    return SensorConfig()


def gaussian_incident(geometry, waist, scale=1.0):
    """Compact Gaussian beam on the reconstruction lattice; used where a
    window-filling beam would leak light past the detector edge."""
    n = geometry.approximant_pad
    cy, cx = lattice_center(geometry)
    idx = np.arange(n)
    y = (idx - cy) * geometry.approximant_pitch
    x = (idx - cx) * geometry.approximant_pitch
    amp = scale * np.exp(-(x[None, :] ** 2 + y[:, None] ** 2) / waist**2)
    return ComplexField(amp, geometry.approximant_pitch, geometry.wavelength)


def noiseless_measurement(geometry, incident, object_phase=None):
    """Detector-plane intensity of the incident beam carrying an optional
    object phase, via the reconstruction-side forward operator."""
    from photonphase.field import propagate
    from photonphase.retrieval import _forward_plan, _object_box

    field = incident
    if object_phase is not None:
        n = geometry.approximant_pad
        pad = np.zeros((n, n))
        r0, c0 = _object_box(geometry)
        s = geometry.object_pixels
        pad[r0 : r0 + s, c0 : c0 + s] = object_phase
        field = incident.with_data(incident.data * np.exp(1j * pad))
    det = propagate(field, _forward_plan(geometry))
    n = geometry.approximant_pad
    rows, cols = geometry.det_shape
    r0, c0 = (n - rows) // 2, (n - cols) // 2
    return np.abs(det.data[r0 : r0 + rows, c0 : c0 + cols]) ** 2

import numpy as np
import pytest

from photonphase import (
    ComplexField,
    GeometryMismatch,
    PropagationPlan,
    SamplingViolation,
    SINGLE_TRANSFORM,
    crop_center,
    embed,
    intensity,
    min_padded_size,
    propagate,
    transfer_plan,
)
from photonphase.field import next_pow2

WL = 632.8e-9
PITCH = 8e-6


def random_field(n, seed=0, pitch=PITCH):
    r = np.random.default_rng(seed)
    return ComplexField(r.normal(size=(n, n)) + 1j * r.normal(size=(n, n)), pitch, WL)


def test_field_validation():
    with pytest.raises(GeometryMismatch):
        ComplexField(np.ones(4, dtype=complex), PITCH, WL)
    with pytest.raises(GeometryMismatch):
        ComplexField(np.ones((4, 4), dtype=complex), -1.0, WL)
    with pytest.raises(GeometryMismatch):
        ComplexField(np.ones((4, 4), dtype=complex), PITCH, 0.0)
    f = ComplexField(3 * np.ones((2, 3), dtype=complex), PITCH, WL)
    assert f.energy == pytest.approx(9 * 6)


def test_min_padded_size_paper_geometry():
    # 0.4 m * 632.8 nm / (8 um)^2 is exactly 3955
    assert min_padded_size(WL, 0.4, PITCH) == 3955
    field = ComplexField(np.ones((1004, 1002), dtype=complex), PITCH, WL)
    plan = transfer_plan(field, 0.4)
    assert plan.padded_size == 4096


def test_next_pow2():
    assert [next_pow2(n) for n in (2, 3, 4, 5, 1000, 1024, 1025)] == [
        2, 4, 4, 8, 1024, 1024, 2048]


def test_plane_wave_eigenfunction():
    # a plane wave filling the whole transform grid is an exact eigenmode
    n = 128
    field = ComplexField(np.ones((n, n), dtype=complex), PITCH, WL)
    plan = PropagationPlan(0.01, n)
    plan.validate(field)
    out = propagate(field, plan)
    assert np.abs(np.abs(out.data) - 1.0).max() < 1e-12


def test_transfer_unitarity():
    field = random_field(256)
    out = propagate(field, PropagationPlan(0.02, 512))
    assert abs(out.energy / field.energy - 1.0) < 1e-10


def test_transfer_round_trip():
    field = random_field(256, seed=1)
    plan_fwd = PropagationPlan(0.02, 512)
    plan_back = PropagationPlan(-0.02, 512)
    there = propagate(field, plan_fwd)
    back = propagate(there, plan_back)
    restored = crop_center(back.data, field.shape)
    err = np.linalg.norm(restored - field.data) / np.linalg.norm(field.data)
    assert err < 1e-10


def test_transfer_semigroup():
    field = random_field(128, seed=2)
    pad = 512
    one = propagate(propagate(field, PropagationPlan(0.012, pad)), PropagationPlan(0.018, pad))
    two = propagate(field, PropagationPlan(0.030, pad))
    err = np.linalg.norm(one.data - two.data) / np.linalg.norm(two.data)
    assert err < 1e-8


def test_gaussian_matches_analytic_solution():
    n, pad = 512, 1024
    w0 = 30 * PITCH
    dist = 0.02
    x = (np.arange(n) - n / 2) * PITCH
    r2 = x[None, :] ** 2 + x[:, None] ** 2
    field = ComplexField(np.exp(-r2 / w0**2), PITCH, WL)
    out = propagate(field, PropagationPlan(dist, pad))
    z_r = np.pi * w0**2 / WL
    w_z = w0 * np.sqrt(1 + (dist / z_r) ** 2)
    on_axis = np.abs(out.data[pad // 2, pad // 2])
    assert abs(on_axis / (w0 / w_z) - 1.0) < 1e-6
    xp = (np.arange(pad) - pad / 2) * PITCH
    r2p = xp[None, :] ** 2 + xp[:, None] ** 2
    profile = np.abs(out.data) ** 2
    w_meas = np.sqrt(2 * (profile * r2p).sum() / profile.sum())
    assert abs(w_meas / w_z - 1.0) < 1e-6


def test_zero_distance_identity():
    field = random_field(64)
    out = propagate(field, PropagationPlan(0.0, 128))
    assert out is field


def test_sampling_violation():
    field = ComplexField(np.ones((128, 128), dtype=complex), PITCH, WL)
    bound = 128 * PITCH**2 / WL
    with pytest.raises(SamplingViolation):
        propagate(field, PropagationPlan(bound * 1.01, 128))
    propagate(field, PropagationPlan(bound * 0.99, 128))


def test_field_exceeds_pad():
    field = random_field(256)
    with pytest.raises(GeometryMismatch):
        propagate(field, PropagationPlan(0.001, 128))


def test_single_transform_output_pitch_and_round_trip():
    n = 252
    dist = 0.1012
    field = random_field(n, seed=3)
    fwd = PropagationPlan(dist, n, SINGLE_TRANSFORM)
    out = propagate(field, fwd)
    assert out.pitch == pytest.approx(WL * dist / (n * PITCH))
    back = propagate(out, PropagationPlan(-dist, n, SINGLE_TRANSFORM))
    assert back.pitch == pytest.approx(PITCH)
    err = np.linalg.norm(back.data - field.data) / np.linalg.norm(field.data)
    assert err < 1e-10


def test_single_transform_against_transfer_function():
    # both discretise the same operator: propagate a compact Gaussian by the
    # two methods onto the same output lattice and compare
    n = 500
    dist = 0.1012
    obj_pitch = WL * dist / (n * PITCH)
    x = (np.arange(n) - (n - 1) / 2) * obj_pitch
    r2 = x[None, :] ** 2 + x[:, None] ** 2
    w = 0.3e-3
    gauss_obj = ComplexField(np.exp(-r2 / w**2), obj_pitch, WL)
    st = propagate(gauss_obj, PropagationPlan(dist, n, SINGLE_TRANSFORM))

    m = 1024
    xf = (np.arange(m) - (m - 1) / 2) * PITCH
    r2f = xf[None, :] ** 2 + xf[:, None] ** 2
    gauss_det = ComplexField(np.exp(-r2f / w**2), PITCH, WL)
    tf = propagate(gauss_det, PropagationPlan(dist, 2048))

    a_st = np.abs(crop_center(st.data, 256))
    a_tf = np.abs(crop_center(tf.data, 256))
    assert np.abs(a_st - a_tf).max() / a_tf.max() < 1e-5


def test_intensity():
    assert (intensity(ComplexField(np.ones((4, 4), dtype=complex), PITCH, WL)) == 1).all()
    data = np.zeros((8, 8), dtype=complex)
    data[2, 5] = 3.0
    img = intensity(ComplexField(data, PITCH, WL))
    assert img[2, 5] == pytest.approx(9.0)
    assert img.sum() == pytest.approx(9.0)


def test_intensity_parseval_through_propagation():
    field = random_field(128, seed=4)
    out = propagate(field, PropagationPlan(0.01, 256))
    assert abs(intensity(out).sum() / intensity(field).sum() - 1.0) < 1e-10


def test_embed():
    small = ComplexField(np.ones((2, 2), dtype=complex), PITCH, WL)
    big = embed(small, 4)
    assert big.shape == (4, 4)
    assert (big.data[1:3, 1:3] == 1).all()
    assert big.data.sum() == pytest.approx(4.0)
    assert big.energy == pytest.approx(small.energy)
    with pytest.raises(GeometryMismatch):
        embed(big, 2)


def test_embed_object_in_detector_grid():
    obj = ComplexField(np.ones((500, 500), dtype=complex), PITCH, WL)
    det = embed(obj, (1004, 1002))
    assert det.shape == (1004, 1002)
    assert (det.data[252:752, 251:751] == 1).all()
    assert det.energy == pytest.approx(obj.energy)
    assert crop_center(det.data, 500) == pytest.approx(obj.data)

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locwave.groups import UndefinedProjectionError
from locwave.observables import expected_value, variance
from locwave.representations import FSTFT, FiniteWavelet
from locwave.uncertainty import (WeightProfile, correction_matrix, global_uncertainty, global_variance,
                                 global_variance_selfadjoint, global_variance_unitary, orbit_invariance_check,
                                 random_group_elements, uncertainty_value)

from conftest import random_signal


def obs(spec, m, k=0):
    return spec.canonical_observables().block(m)[k]


# --- weight profiles --------------------------------------------------------

def test_presets(shearlet):
    p = WeightProfile.for_transform(shearlet, "isotropic")
    assert [W.shape for W in p.matrices] == [(2, 2), (1, 1), (1, 1), (1, 1)]
    q = WeightProfile.preset("isotropic", [2, 1], scale=3.0)
    assert np.allclose(q[0], 3 * np.eye(2))
    with pytest.raises(ValueError):
        WeightProfile.preset("anisotropic", [1])


def test_scalars_and_matrices(fstft16):
    p = WeightProfile.for_transform(fstft16, [2.0, 0.5])
    assert p[0][0, 0] == 2.0 and p[1][0, 0] == 0.5
    with pytest.raises(ValueError):
        WeightProfile.for_transform(fstft16, [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        WeightProfile.for_transform(fstft16, [np.eye(2), np.eye(1)])
    with pytest.raises(ValueError):
        WeightProfile.for_transform(fstft16, [[[-1.0]], [[1.0]]])


def test_profile_json_roundtrip():
    p = WeightProfile([np.array([[2.0, 1j], [-1j, 1.0]]), np.eye(1)])
    back = WeightProfile.from_json(json.dumps(p.to_dict()))
    assert all(np.allclose(a, b) for a, b in zip(p.matrices, back.matrices))
    with pytest.raises(ValueError):
        WeightProfile.from_dict({"weights": []})


# --- self-adjoint global variances ------------------------------------------

def test_wavelet_global_time_variance(wavelet):
    # Sigma_f(T1) = e^{-2 e_f(T2)} sigma_f(T1)
    f = wavelet.rep_apply(wavelet.element([1.0], [0.6], [0]), wavelet.default_window())
    e2 = expected_value(f, obs(wavelet, 1))
    expect = np.exp(-2 * e2) * variance(f, obs(wavelet, 0))
    assert global_variance(wavelet, f, 0) == pytest.approx(expect, rel=1e-12)
    # the scale block is the last self-adjoint block before reflections: no correction
    assert global_variance(wavelet, f, 1) == pytest.approx(variance(f, obs(wavelet, 1)), rel=1e-12)


def test_correction_is_identity_at_identity_frame(wavelet):
    f = wavelet.default_window()
    e2 = expected_value(f, obs(wavelet, 1))
    fc = wavelet.rep_apply(wavelet.element([0.0], [-e2], [0]), f)
    A, degenerate = correction_matrix(wavelet, fc, 0)
    assert not degenerate
    assert abs(A[0, 0] - 1) < 1e-3
    assert global_variance(wavelet, fc, 0) == pytest.approx(variance(fc, obs(wavelet, 0)), rel=2e-3)


def test_shearlet_corrections(shearlet):
    f = shearlet.rep_apply(shearlet.element([0.5, -0.3], [0.4], [0.3], [0]), shearlet.default_window())
    e2 = expected_value(f, obs(shearlet, 1))
    e3 = expected_value(f, obs(shearlet, 2))
    e4 = expected_value(f, obs(shearlet, 3))
    s = np.sign(e4.real)
    g2, g3 = -np.exp(-e3 / 2) * e2, -e3
    A1 = s * np.array([[np.exp(g3), np.exp(g3 / 2) * g2], [0, np.exp(g3 / 2)]])
    assert np.allclose(correction_matrix(shearlet, f, 0)[0], A1, rtol=1e-12)
    assert correction_matrix(shearlet, f, 1)[0][0, 0] == pytest.approx(np.exp(-e3 / 2), rel=1e-12)


def test_shearlet_uncertainty_is_sum_of_three_blocks(shearlet):
    f = shearlet.default_window()
    rep = global_uncertainty(shearlet, f)
    # windows supported on w1 > 0 have no reflection spread
    assert rep.global_[3] < 1e-12
    assert rep.total == pytest.approx(sum(rep.global_[:3]), rel=1e-12)


def test_degenerate_reflection_falls_back_to_identity(small_wavelet):
    # a real window has a symmetric spectrum, so e(T3) = 0
    f = small_wavelet.default_window()
    fr = small_wavelet.space.signal(f.values.real)
    val, A, degenerate = global_variance_selfadjoint(small_wavelet, fr, 0, return_details=True)
    assert degenerate == [2]
    assert np.allclose(A, np.eye(1))
    assert val == pytest.approx(variance(fr, obs(small_wavelet, 0)))
    with pytest.raises(UndefinedProjectionError):
        global_variance_selfadjoint(small_wavelet, fr, 0, strict=True)
    assert global_uncertainty(small_wavelet, fr).degenerate == [2]


def test_kind_mismatch_rejected(small_wavelet, fstft16):
    f = small_wavelet.default_window()
    with pytest.raises(ValueError):
        global_variance_selfadjoint(small_wavelet, f, 2)
    with pytest.raises(ValueError):
        global_variance_unitary(small_wavelet, f, 0)


# --- unitary global variances -----------------------------------------------

def test_finwave_delta_and_flat(finwave17):
    N = 17
    d = np.zeros(N)
    d[4] = 1
    assert global_variance_unitary(finwave17, finwave17.space.signal(d), 0) == pytest.approx(0.0, abs=1e-15)
    flat = finwave17.space.signal(np.full(N, 1 / np.sqrt(N)))
    assert global_variance_unitary(finwave17, flat, 0) == pytest.approx(1 - 1 / N ** 2, rel=1e-12)


def test_finwave_uncertainty_formula(finwave17, rng):
    f = finwave17.admissible_projection(random_signal(finwave17.space, rng)).normalized()
    w1, w2 = 0.7, 1.3
    expect = w1 * (1 - np.sum(np.abs(f.values) ** 4) ** 2) + w2 * variance(f, obs(finwave17, 1))
    assert uncertainty_value(finwave17, f, [w1, w2]) == pytest.approx(expect, rel=1e-12)


def test_fstft_uncertainty_formula(fstft16, rng):
    f = random_signal(fstft16.space, rng)
    w1, w2 = 2.0, 0.25
    expect = w1 * variance(f, obs(fstft16, 0)) + w2 * variance(f, obs(fstft16, 1))
    rep = global_uncertainty(fstft16, f, [w1, w2])
    assert rep.total == pytest.approx(expect, rel=1e-12)
    assert rep.plain == pytest.approx(rep.global_)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_finite_orbit_invariance(seed):
    r = np.random.default_rng(seed)
    for spec in (FSTFT(16), FiniteWavelet(17)):
        f = spec.admissible_projection(random_signal(spec.space, r))
        gs = random_group_elements(spec, r, 5)
        assert orbit_invariance_check(spec, f, "identity", gs) < 1e-10


def test_wavelet_orbit_invariance(wavelet, rng):
    f = wavelet.default_window()
    gs = random_group_elements(wavelet, rng, 5)
    assert orbit_invariance_check(wavelet, f, "identity", gs) < 1e-3


def test_global_variances_nonnegative(fstft16, finwave17, small_wavelet, rng):
    for spec in (fstft16, finwave17):
        f = spec.admissible_projection(random_signal(spec.space, rng))
        assert min(global_uncertainty(spec, f).global_) >= 0
    W = rng.standard_normal((1, 1)) ** 2
    assert global_variance(small_wavelet, small_wavelet.default_window(), 0, W) >= 0


def test_zero_uncertainty_orbit_check_raises(finwave17):
    d = np.zeros(17)
    d[0] = 1
    f = finwave17.space.signal(d)
    # delta: both global variances vanish, so the relative deviation is undefined
    with pytest.raises(ArithmeticError):
        orbit_invariance_check(finwave17, f, [1.0, 0.0], [])


def test_report_dict(fstft16):
    rep = global_uncertainty(fstft16, fstft16.default_window(), product=True)
    d = json.loads(rep.to_json())
    assert set(d) == {"transform", "plain_variance", "global_variance", "correction", "S",
                      "degenerate_blocks", "S_product"}
    assert d["S_product"] == pytest.approx(np.prod(d["global_variance"]))

import numpy as np
import pytest
from scipy.integrate import quad

from locwave.observables import expected_value
from locwave.representations import (FSTFT, FiniteWavelet, InadmissibleWindowError, PhaseFunction, Shearlet,
                                     Wavelet1D, lognormal_bump, make_transform, read_phase, write_phase)
from locwave.spaces import inner_product

from conftest import random_signal


def delta(spec, i=0):
    v = np.zeros(spec.n, dtype=complex)
    v[i] = 1
    return spec.space.signal(v)


def finite_element(spec, rng):
    return spec.element([rng.integers(0, spec.n)], [rng.integers(0, spec.group.blocks[1].quantity.n)])


def random_admissible(spec, rng):
    return spec.admissible_projection(random_signal(spec.space, rng))


# --- representation operators -----------------------------------------------

def test_fstft_shift_of_delta():
    spec = FSTFT(8)
    out = spec.rep_apply(spec.element([1], [0]), delta(spec))
    assert np.allclose(out.values, delta(spec, 1).values)


def test_fstft_modulation():
    spec = FSTFT(8)
    f = spec.space.signal(np.ones(8))
    out = spec.rep_apply(spec.element([0], [3]), f)
    assert np.allclose(out.values, np.exp(2j * np.pi * 3 * np.arange(8) / 8))


def test_finwave_dilation_permutes_frequencies():
    # N = 5: the dilation a = 2 maps the spectrum index k -> 2k mod 5
    spec = FiniteWavelet(5)
    assert spec.root == 2
    rng = np.random.default_rng(3)
    f = random_signal(spec.space, rng)
    out = spec.rep_apply(spec.element([0], [1]), f)
    k = np.arange(5)
    assert np.allclose(np.fft.fft(out.values), np.fft.fft(f.values)[(2 * k) % 5], atol=1e-12)


@pytest.mark.parametrize("spec", [FSTFT(16), FiniteWavelet(17)], ids=["fstft", "finwave"])
def test_finite_reps_unitary_and_homomorphic(spec, rng):
    for _ in range(20):
        f = random_signal(spec.space, rng)
        g, h = finite_element(spec, rng), finite_element(spec, rng)
        assert spec.rep_apply(g, f).norm() == pytest.approx(f.norm(), rel=1e-12)
        lhs = spec.rep_apply(g, spec.rep_apply(h, f))
        gh = spec.group.multiply(g, h)
        rhs = spec.rep_apply(gh, f) * complex(np.ravel(spec.group.cocycle(g, h))[0])
        assert (lhs - rhs).norm() < 1e-12 * f.norm()


def test_wavelet_rep_matches_closed_form(small_wavelet):
    # pi(g) f(t) = e^{-g2/2} f(g3 e^{-g2}(t - g1)) on a band-limited Morlet-like window
    spec = small_wavelet
    t = spec.space.grid(0)

    def morlet(x):
        return np.exp(-x ** 2 / 8.0) * np.exp(2.5j * x)

    f = spec.space.signal(morlet(t))
    for g1, g2, r in [(3.0, 0.4, 0), (-5.0, -0.7, 0), (1.5, 0.2, 1)]:
        s = 1 - 2 * r
        out = spec.rep_apply(spec.element([g1], [g2], [r]), f)
        ref = np.exp(-g2 / 2) * morlet(s * np.exp(-g2) * (t - g1))
        assert np.max(np.abs(out.values - ref)) < 1e-8


def test_wavelet_rep_unitary_and_group_law(small_wavelet, rng):
    spec = small_wavelet
    f = spec.default_window()
    for _ in range(10):
        g = spec.element([rng.uniform(-4, 4)], [rng.uniform(-0.5, 0.5)], [rng.integers(0, 2)])
        h = spec.element([rng.uniform(-4, 4)], [rng.uniform(-0.5, 0.5)], [rng.integers(0, 2)])
        assert spec.rep_apply(g, f).norm() == pytest.approx(1.0, rel=1e-8)
        lhs = spec.rep_apply(g, spec.rep_apply(h, f))
        rhs = spec.rep_apply(spec.group.multiply(g, h), f)
        assert (lhs - rhs).norm() < 1e-5


def test_shearlet_rep_unitary_and_group_law(shearlet, rng):
    spec = shearlet
    f = spec.default_window()
    for _ in range(4):
        g = spec.element(rng.uniform(-2, 2, 2), [rng.uniform(-0.5, 0.5)], [rng.uniform(-0.4, 0.4)], [0])
        h = spec.element(rng.uniform(-2, 2, 2), [rng.uniform(-0.5, 0.5)], [rng.uniform(-0.4, 0.4)], [0])
        assert spec.rep_apply(g, f).norm() == pytest.approx(1.0, rel=1e-5)
        lhs = spec.rep_apply(g, spec.rep_apply(h, f))
        rhs = spec.rep_apply(spec.group.multiply(g, h), f)
        assert (lhs - rhs).norm() < 1e-3


def test_wavelet_dilation_scales_time_mean(wavelet):
    # e_{pi(g2) f}(T1) = e^{g2} e_f(T1) for a window whose time mean is off zero
    spec = wavelet
    T1 = spec.canonical_observables().block(0)[0]
    f = spec.rep_apply(spec.element([2.0], [0.0], [0]), spec.default_window())
    e = expected_value(f, T1)
    for g2 in (-0.8, 0.5):
        fd = spec.rep_apply(spec.element([0.0], [g2], [0]), f)
        assert abs(expected_value(fd, T1) - np.exp(g2) * e) < 1e-3 * abs(np.exp(g2) * e)


def test_rep_rejects_foreign_signal(small_wavelet, fstft16):
    with pytest.raises(ValueError):
        fstft16.rep_apply(fstft16.group.identity(), small_wavelet.default_window())


# --- canonical observables --------------------------------------------------

def test_wavelet_scale_multiplier(small_wavelet):
    T2 = small_wavelet.canonical_observables().block(1)[0]
    assert np.allclose(T2.multiplier, -np.log(np.abs(small_wavelet.omega)))


def test_shearlet_slope_multiplier(small_shearlet):
    T2 = small_shearlet.canonical_observables().block(1)[0]
    w = small_shearlet.omega
    assert np.allclose(T2.multiplier, -w[None, :] / w[:, None])
    assert len(small_shearlet.canonical_observables().block(0)) == 2


def test_finwave_log_frequency_multiplier():
    spec = FiniteWavelet(7)
    T2 = spec.canonical_observables().block(1)[0]
    r = spec.root
    assert r == 3
    for m in range(6):
        assert T2.multiplier[pow(r, m, 7)] == pytest.approx(np.exp(-2j * np.pi * m / 6))


def test_fstft_observables_are_roots(fstft16):
    Q, = fstft16.canonical_observables().block(0)
    P, = fstft16.canonical_observables().block(1)
    assert np.allclose(Q.multiplier, np.exp(2j * np.pi * np.arange(16) / 16))
    assert np.allclose(P.multiplier, Q.multiplier)


# --- analysis and synthesis -------------------------------------------------

@pytest.mark.parametrize("name", ["fstft16", "finwave17", "small_wavelet", "small_shearlet"])
def test_ambiguity_at_identity_is_norm(name, request):
    spec = request.getfixturevalue(name)
    f = spec.default_window() * 1.7
    V = spec.analyze(f, f)
    idx = spec.grid.locate(spec.group.identity())
    assert V.values[idx] == pytest.approx(f.norm() ** 2, rel=1e-10)


def test_fstft_delta_analysis():
    spec = FSTFT(8)
    V = spec.analyze(delta(spec), delta(spec)).values
    assert np.allclose(np.abs(V[0]), 1)
    assert np.allclose(V[1:], 0)


@pytest.mark.parametrize("name", ["fstft16", "finwave17"])
def test_covariance_of_analysis(name, request, rng):
    spec = request.getfixturevalue(name)
    f = random_admissible(spec, rng)
    V0 = np.abs(spec.analyze(f, f).values)
    g0 = finite_element(spec, rng)
    V = np.abs(spec.analyze(f, spec.rep_apply(g0, f)).values)
    els = spec.grid.elements
    flat = spec.group.inverse(g0)
    for idx in np.ndindex(spec.grid.shape):
        x = spec.group.multiply(flat, els[idx])
        assert V[idx] == pytest.approx(V0[spec.grid.locate(x)], abs=1e-12)


@pytest.mark.parametrize("name", ["fstft16", "finwave17"])
def test_synthesis_of_identity_delta(name, request, rng):
    spec = request.getfixturevalue(name)
    h = random_admissible(spec, rng)
    F = np.zeros(spec.grid.shape, dtype=complex)
    F[spec.grid.locate(spec.group.identity())] = 1.0
    out = spec.synthesize(h, PhaseFunction(spec, F))
    assert np.allclose(out.values, h.values)


@pytest.mark.parametrize("name", ["fstft16", "finwave17"])
def test_finite_reconstruction_and_linearity(name, request, rng):
    spec = request.getfixturevalue(name)
    f, h, s = (random_admissible(spec, rng) for _ in range(3))
    c = spec.calibration_constant()
    assert c == pytest.approx(spec.n, rel=1e-12)
    out = spec.synthesize(h, spec.analyze(f, s))
    expect = s * (c * inner_product(h, f))
    assert (out - expect).norm() < 1e-9 * expect.norm()
    F1, F2 = spec.analyze(f, s), spec.analyze(h, s)
    lin = spec.synthesize(h, F1 + F2) - spec.synthesize(h, F1) - spec.synthesize(h, F2)
    assert lin.norm() < 1e-12


# the continuum constants need grids that cover the window's scale spread
def test_wavelet_calibration_is_two_pi(wavelet):
    assert wavelet.calibration_constant() == pytest.approx(2 * np.pi, rel=1e-3)


def test_shearlet_calibration_is_two_pi_squared(shearlet):
    assert shearlet.calibration_constant() == pytest.approx((2 * np.pi) ** 2, rel=1e-3)


def test_wavelet_reconstruction(wavelet):
    spec = wavelet
    f = spec.normalize_window(spec.default_window())
    s = spec.rep_apply(spec.element([4.0], [0.3], [0]), spec.default_window())
    out = spec.synthesize(f, spec.analyze(f, s))
    # the sampled phase grid is a frame, not an exact resolution of identity
    assert (out - s).norm() < 5e-2


# --- Duflo-Moore operator and admissibility ---------------------------------

def test_fstft_duflo_moore_is_identity(fstft16, rng):
    f = random_signal(fstft16.space, rng)
    assert fstft16.duflo_moore_apply(f) is f


def test_wavelet_duflo_moore_norm_against_quad():
    spec = Wavelet1D(n=8192, length=512.0, stride=64, dilations=(0.0, 0.0, 1))
    s = 0.5
    f = spec.window_from_spectrum(lambda w: lognormal_bump(w, 0.0, s))
    val = spec.duflo_moore_apply(f).norm() ** 2
    ref, _ = quad(lambda w: lognormal_bump(w, 0.0, s) ** 2 / w, 1e-8, 50, points=[0.5, 1, 2], limit=200)
    assert abs(val - ref) / ref < 1e-3
    assert ref == pytest.approx(s * np.sqrt(np.pi), rel=1e-8)


def test_wavelet_rejects_dc_window(small_wavelet):
    t = small_wavelet.space.grid(0)
    g = small_wavelet.space.signal(np.exp(-t ** 2))
    with pytest.raises(InadmissibleWindowError):
        small_wavelet.check_admissible(g)
    with pytest.raises(InadmissibleWindowError):
        small_wavelet.analyze(g, g)
    small_wavelet.check_admissible(small_wavelet.default_window())


def test_finwave_rejects_nonzero_mean(finwave17):
    f = finwave17.space.signal(np.ones(17))
    with pytest.raises(InadmissibleWindowError):
        finwave17.check_admissible(f)
    finwave17.check_admissible(finwave17.admissible_projection(f + delta(finwave17)))


def test_shearlet_rejects_dc_column(small_shearlet):
    x1 = small_shearlet.space.grid(0)
    x2 = small_shearlet.space.grid(1)
    g = small_shearlet.space.signal(np.exp(-x1 ** 2 - x2 ** 2))
    with pytest.raises(InadmissibleWindowError):
        small_shearlet.check_admissible(g)


# --- group convolution ------------------------------------------------------

@pytest.mark.parametrize("name", ["fstft16", "finwave17"])
def test_convolution_identities(name, request, rng):
    spec = request.getfixturevalue(name)
    f = spec.normalize_window(random_admissible(spec, rng))
    Q = PhaseFunction(spec, rng.standard_normal(spec.grid.shape) + 1j * rng.standard_normal(spec.grid.shape))
    D = np.zeros(spec.grid.shape, dtype=complex)
    D[spec.grid.locate(spec.group.identity())] = 1
    assert np.allclose(spec.group_convolve(PhaseFunction(spec, D), Q).values, Q.values, atol=1e-12)
    A = spec.analyze(f, f)
    P = spec.analyze(f, spec.synthesize(f, Q))
    assert np.max(np.abs(spec.group_convolve(A, Q).values - P.values)) < 1e-10
    R = spec.analyze(f, random_signal(spec.space, rng))
    assert np.max(np.abs(spec.group_convolve(A, R).values - R.values)) < 1e-10


def test_convolution_needs_finite_group(small_wavelet):
    F = PhaseFunction(small_wavelet, np.zeros(small_wavelet.grid.shape))
    with pytest.raises(ValueError):
        small_wavelet.group_convolve(F, F)


# --- grids and files --------------------------------------------------------

def test_grid_locate(small_wavelet):
    grid = small_wavelet.grid
    idx = (3, 7)
    assert grid.locate(grid.element_at(idx)) == idx
    with pytest.raises(ValueError):
        grid.locate(small_wavelet.element([0.01], [0.0], [0]))
    with pytest.raises(ValueError):
        grid.locate(small_wavelet.element([0.0], [0.0], [1]))


def test_wavelet_haar_density(small_wavelet):
    g = small_wavelet.grid
    w = g.weights
    assert np.allclose(w[0] / w[0, 0], np.exp(-(small_wavelet.dilations - small_wavelet.dilations[0])))


@pytest.mark.parametrize("name", ["fstft16", "finwave17", "small_wavelet"])
def test_phase_csv_roundtrip(name, request, tmp_path, rng):
    spec = request.getfixturevalue(name)
    F = PhaseFunction(spec, rng.standard_normal(spec.grid.shape) + 1j * rng.standard_normal(spec.grid.shape))
    write_phase(F, tmp_path / "p.csv")
    G = read_phase(spec, tmp_path / "p.csv")
    assert np.array_equal(G.values, F.values)


def test_phase_csv_rejects_other_grid(tmp_path, fstft16):
    F = PhaseFunction(fstft16, np.zeros(fstft16.grid.shape))
    write_phase(F, tmp_path / "p.csv")
    with pytest.raises(ValueError):
        read_phase(FiniteWavelet(17), tmp_path / "p.csv")
    with pytest.raises(ValueError):
        read_phase(FSTFT(8), tmp_path / "p.csv")


def test_make_transform():
    assert isinstance(make_transform("finwave", n=5), FiniteWavelet)
    assert isinstance(make_transform("shearlet", n=32, length=24.0, stride=4, shears=(-1, 1, 3),
                                     dilations=(-1, 1, 3)), Shearlet)
    with pytest.raises(ValueError):
        make_transform("curvelet")

import numpy as np
import pytest

from locwave.observables import expected_value
from locwave.representations import FSTFT, FiniteWavelet
from locwave.uncertainty import uncertainty_value
from locwave.window_design import (MinimizerFamily, Objective, OptimizerConfig, builtin_window,
                                   finite_difference_check, minimizer_grid, minimizer_window,
                                   optimize_window, random_window, trace_is_nonincreasing, verify_minimizer)


@pytest.fixture(scope="module")
def mgrid():
    return minimizer_grid()


# --- minimizer family -------------------------------------------------------

def test_bump_support_and_smoothness():
    b = MinimizerFamily().bump
    x = np.linspace(-0.5, 1.5, 4001)
    y = b(x)
    assert np.all(y[(x <= 0) | (x >= 1)] == 0)
    assert np.all(y[(x > 0.01) & (x < 0.99)] > 0)
    # second differences stay bounded: the bump is twice differentiable
    h = x[1] - x[0]
    d2 = np.diff(y, 2) / h ** 2
    assert np.max(np.abs(np.diff(d2))) < 1.0


def test_minimizer_spectrum_support(mgrid):
    fam = MinimizerFamily()
    w = mgrid.omega
    for n in (4, 8):
        F = fam.spectrum(n, w)
        sup = w[np.abs(F) > 0]
        assert sup.min() > n ** 2 and sup.max() < n ** 2 + n


def test_minimizer_window_moments(mgrid):
    f = minimizer_window(MinimizerFamily(), 8, mgrid)
    assert f.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(expected_value(f, mgrid.canonical_observables().block(0)[0])) < 1e-6


def test_minimizer_window_errors(mgrid):
    fam = MinimizerFamily()
    with pytest.raises(ValueError):
        minimizer_window(fam, 64, mgrid)           # 64^2 beyond the grid
    with pytest.raises(ValueError):
        minimizer_window(fam, 1, mgrid)            # n = 1 spans about 3 samples
    with pytest.raises(ValueError):
        fam.spectrum(0, mgrid.omega)


def test_verify_minimizer_flags(mgrid):
    rep = verify_minimizer(n_list=[4, 8, 16, 32], spec=mgrid)
    assert all(rep.flags.values()), rep.flags
    assert rep.to_csv().splitlines()[0] == "n,e_T1,e_T2,sigma_T1,sigma_T2"
    assert len(rep.to_csv().splitlines()) == 5


def test_verify_minimizer_needs_increasing_list(mgrid):
    with pytest.raises(ValueError):
        verify_minimizer(n_list=[8, 4], spec=mgrid)


# --- built-in windows -------------------------------------------------------

@pytest.mark.parametrize("name", ["fstft16", "finwave17", "small_wavelet", "small_shearlet"])
@pytest.mark.parametrize("kind", ["gaussian", "flat", "delta"])
def test_builtin_windows_admissible_unit(name, kind, request):
    spec = request.getfixturevalue(name)
    if kind == "delta" and name in ("small_wavelet", "small_shearlet"):
        # a sampled delta has a flat spectrum including w = 0
        with pytest.raises(ValueError):
            builtin_window(spec, "builtin:delta")
        return
    f = builtin_window(spec, "builtin:" + kind)
    spec.check_admissible(f)
    assert f.norm() == pytest.approx(1.0, rel=1e-12)


def test_builtin_window_errors(fstft16):
    with pytest.raises(ValueError):
        builtin_window(fstft16, "builtin:hann")
    with pytest.raises(ValueError):
        builtin_window(fstft16, "builtin:minimizer(4)")


def test_builtin_minimizer(mgrid):
    f = builtin_window(mgrid, "builtin:minimizer(8)")
    assert f.norm() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        builtin_window(mgrid, "builtin:minimizer(x)")


def test_flat_finwave_spectrum():
    spec = FiniteWavelet(17)
    F = np.fft.fft(builtin_window(spec, "flat").values)
    assert abs(F[0]) < 1e-12
    assert np.allclose(np.abs(F[1:]), np.abs(F[1]))


# --- objective and gradient -------------------------------------------------

@pytest.mark.parametrize("name", ["fstft16", "finwave17", "small_wavelet"])
@pytest.mark.parametrize("kind", ["global", "plain"])
def test_gradient_matches_finite_differences(name, kind, request, rng):
    spec = request.getfixturevalue(name)
    obj = Objective(spec, None, kind)
    for _ in range(3):
        f = random_window(spec, rng)
        assert finite_difference_check(obj, f, rng, n_dirs=3) < 1e-5


def test_objective_matches_uncertainty(finwave17, rng):
    f = random_window(finwave17, rng)
    assert Objective(finwave17, [1.0, 2.0]).value(f) == pytest.approx(uncertainty_value(finwave17, f, [1.0, 2.0]))


def test_unknown_objective(fstft16):
    with pytest.raises(ValueError):
        Objective(fstft16, None, "worst")


# --- optimizer --------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(step=0)
    with pytest.raises(ValueError):
        OptimizerConfig(max_iter=-1)
    assert OptimizerConfig.from_dict({"step": 0.5, "objective": "plain"}).step == 0.5


def test_descent_from_gaussian(fstft16):
    f0 = fstft16.default_window()
    res = optimize_window(fstft16, "global", None, OptimizerConfig(max_iter=50), f0)
    assert trace_is_nonincreasing(res.trace)
    assert res.objective <= res.trace[0][1]
    assert res.window.norm() == pytest.approx(1.0, abs=1e-12)


def test_finwave_beats_random_search(finwave17):
    res = optimize_window(finwave17, "global", None, OptimizerConfig(max_iter=400))
    rng = np.random.default_rng(7)
    best = min(uncertainty_value(finwave17, random_window(finwave17, rng)) for _ in range(1000))
    assert res.objective <= best
    finwave17.check_admissible(res.window)


def test_optimizer_deterministic(finwave17):
    a = optimize_window(finwave17, "global", None, OptimizerConfig(max_iter=30, seed=3))
    b = optimize_window(finwave17, "global", None, OptimizerConfig(max_iter=30, seed=3))
    assert np.array_equal(a.window.values, b.window.values)
    assert a.trace == b.trace


def test_halfplane_support(small_wavelet):
    res = optimize_window(small_wavelet, "global", None, OptimizerConfig(max_iter=5, halfplane=True))
    F = small_wavelet.spectrum(res.window)
    assert np.abs(F[small_wavelet.omega < 0]).max() < 1e-12 * np.abs(F).max()
    with pytest.raises(ValueError):
        optimize_window(FSTFT(8), "global", None, OptimizerConfig(max_iter=1, halfplane=True))


def test_trace_csv(fstft16):
    res = optimize_window(fstft16, "plain", None, OptimizerConfig(max_iter=3))
    lines = res.trace_csv().splitlines()
    assert lines[0] == "iter,objective,grad_norm"
    assert len(lines) == len(res.trace) + 1
    assert res.summary()["status"] in ("converged", "stalled", "max_iter")

import numpy as np
import pytest

from locwave.representations import FSTFT, FiniteWavelet, Shearlet, Wavelet1D

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        prev = _ACCEPTANCE.get(n, (title, True))
        _ACCEPTANCE[n] = (title, prev[1] and rep.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[n]
        terminalreporter.write_line(f"ACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def fstft16():
    return FSTFT(16)


@pytest.fixture(scope="session")
def finwave17():
    return FiniteWavelet(17)


@pytest.fixture(scope="session")
def wavelet():
    return Wavelet1D()


@pytest.fixture(scope="session")
def small_wavelet():
    return Wavelet1D(n=1024, length=128.0, stride=16, dilations=(-1.0, 1.0, 21))


@pytest.fixture(scope="session")
def shearlet():
    return Shearlet()


@pytest.fixture(scope="session")
def small_shearlet():
    return Shearlet(n=64, length=48.0, stride=4, shears=(-1.0, 1.0, 5), dilations=(-1.0, 1.0, 5))


def random_signal(space, rng):
    v = rng.standard_normal(space.shape) + 1j * rng.standard_normal(space.shape)
    return space.signal(v)

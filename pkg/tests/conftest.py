import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from macrovis.statevec import from_amplitudes
from macrovis.vcm import AdditiveOperator

settings.register_profile(
    "macrovis", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("macrovis")


def random_state(rng, n):
    z = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return from_amplitudes(z)


def random_operator(rng, n, integer=False, label="R"):
    c = rng.normal(size=(3, n))
    if integer:
        # integer Bloch vectors produce many coinciding eigenvalue sums
        c = rng.integers(-1, 2, size=(3, n)).astype(float)
    return AdditiveOperator(c, label)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])

import sys

import numpy as np
import pytest

from spde_yosida import kernels
from spde_yosida.monotone import Power
from spde_yosida.noise import DiffusionSpec
from spde_yosida.semigroup import TimeGrid
from spde_yosida.solver import Scenario, initial_profile

BACKENDS = sorted(kernels.available_backends())


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per importable kernel backend."""
    with kernels.use_backend(request.param) as impl:
        yield impl


def cubic_scenario(**kw):
    base = dict(graph=Power(3.0), u0=initial_profile(128, "bump", norm=1.0), grid=TimeGrid(0.25, 1e-3),
                noise=DiffusionSpec(gamma=2.0), seed=42, lam=1e-2)
    base.update(kw)
    return Scenario(**base)


def small_scenario(**kw):
    base = dict(graph=Power(3.0), u0=initial_profile(32, "bump", norm=1.0), grid=TimeGrid(0.05, 1e-3),
                noise=DiffusionSpec(gamma=2.0), seed=1, lam=1e-2)
    base.update(kw)
    return Scenario(**base)


@pytest.fixture(scope="session")
def cubic():
    return cubic_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)

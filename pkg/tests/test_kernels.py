import numpy as np
import pytest

from spde_yosida import _pykernels, kernels
from spde_yosida.errors import NumericalError
from spde_yosida.monotone import Power, SignGraph, Tabulated

COMPILED = "compiled" in kernels.available_backends()


def table_args(t):
    return t.knots, t.lo, t.hi, t.coef, t.slope_left, t.slope_right


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in kernels.available_backends()


def test_use_backend_restores():
    before = kernels.resolvent_power
    with kernels.use_backend("python"):
        assert kernels.BACKEND == "python"
        assert kernels.resolvent_power is _pykernels.resolvent_power
    assert kernels.resolvent_power is before


def test_unknown_backend():
    with pytest.raises(ValueError):
        with kernels.use_backend("fortran"):
            pass


@pytest.mark.skipif(not COMPILED, reason="extension not built")
class TestAgreement:
    x = np.random.default_rng(3).uniform(-50, 50, 20000)

    @pytest.mark.parametrize("lam", [1e-4, 1e-2, 1.0, 30.0])
    def test_power(self, lam):
        c = kernels.available_backends()["compiled"]
        for p in (1.5, 2.0, 3.0, 5.0):
            np.testing.assert_allclose(c.resolvent_power(self.x, p, lam), _pykernels.resolvent_power(self.x, p, lam),
                                       rtol=4e-15, atol=1e-300)

    @pytest.mark.parametrize("lam", [1e-4, 1e-2, 1.0, 30.0])
    def test_expm1(self, lam):
        c = kernels.available_backends()["compiled"]
        np.testing.assert_allclose(c.resolvent_expm1(self.x, lam), _pykernels.resolvent_expm1(self.x, lam),
                                   rtol=4e-15, atol=1e-15)

    @pytest.mark.parametrize("src", [Power(3.0), SignGraph()])
    def test_table(self, src):
        c = kernels.available_backends()["compiled"]
        t = Tabulated.from_graph(src, np.linspace(-8, 8, 3201))
        lam = np.geomspace(1e-3, 10, self.x.size)
        np.testing.assert_array_equal(c.resolvent_table(self.x, lam, *table_args(t)),
                                      _pykernels.resolvent_table(self.x, lam, *table_args(t)))


def test_residuals_small(backend):
    x = np.linspace(-100, 100, 5001)
    for lam in (1e-3, 1.0):
        y = backend.resolvent_power(x, 3.0, lam)
        assert np.max(np.abs(y + lam * y ** 3 - x) / (1 + np.abs(x))) < 1e-13
        y = backend.resolvent_expm1(np.clip(x, -100, 30), lam)
        xc = np.clip(x, -100, 30)
        assert np.max(np.abs(y + lam * np.expm1(y) - xc) / (1 + np.abs(xc))) < 1e-13


def test_zero_input_exact(backend):
    assert backend.resolvent_power(np.zeros(3), 3.0, 0.1).tolist() == [0.0, 0.0, 0.0]
    assert backend.resolvent_expm1(np.zeros(2), 0.1).tolist() == [0.0, 0.0]


def test_nonconvergence_reports_node(monkeypatch):
    monkeypatch.setattr(_pykernels, "MAXITER", 1)
    with pytest.raises(NumericalError) as exc:
        _pykernels.resolvent_power(np.array([0.0, 5.0]), 3.0, 1e-3)
    assert exc.value.context["node"] == 1
    assert "node=1" in str(exc.value)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spde_yosida.errors import ConfigError, DomainError
from spde_yosida.semigroup import (
    Field, SpectralOperator, TimeGrid, apply_semigroup, convolve, convolve_trajectory,
    equicontinuity_modulus, inner, l1_norm, l2_norm, to_coeffs, to_values,
)

vectors = arrays(np.float64, st.integers(1, 64), elements=st.floats(-1e3, 1e3))


@settings(max_examples=100, deadline=None)
@given(u=vectors)
def test_round_trip_and_parseval(u):
    c = to_coeffs(u)
    assert np.max(np.abs(to_values(c) - u)) <= 1e-12 * max(1.0, np.max(np.abs(u)))
    assert abs(l2_norm(u) ** 2 - np.sum(c * c)) <= 1e-10 * max(1.0, np.sum(u * u))


def test_orthonormal_basis():
    op = SpectralOperator(64)
    E = np.array([op.eigenfunction(k).values for k in op.modes])
    assert np.max(np.abs(inner(E[:, None, :], E[None, :, :]) - np.eye(64))) < 1e-10
    np.testing.assert_allclose(to_coeffs(E[2]), np.eye(64)[2], atol=1e-13)


def test_spectrum():
    op = SpectralOperator(16, shift=0.5)
    assert np.all(np.diff(op.mu) > 0) and op.mu[0] == pytest.approx(math.pi ** 2 + 0.5)
    m = op.multipliers(0.01)
    assert np.all(m <= 1.0) and m[-1] <= m[0]


@pytest.mark.parametrize("kw", [{"n_x": 0}, {"n_x": 2.5}, {"n_x": 4, "shift": -1.0}])
def test_operator_rejects(kw):
    with pytest.raises(ConfigError):
        SpectralOperator(**kw)


class TestApply:
    op = SpectralOperator(256)

    def test_identity_at_zero(self, rng):
        u = Field(rng.standard_normal(256))
        np.testing.assert_allclose(apply_semigroup(self.op, 0.0, u).values, u.values, atol=1e-13)

    def test_eigenfunction(self):
        e1 = self.op.eigenfunction(1)
        out = apply_semigroup(self.op, 0.3, e1)
        np.testing.assert_allclose(out.values, math.exp(-math.pi ** 2 * 0.3) * e1.values, atol=1e-14)

    def test_contraction_per_mode_oracle(self, rng):
        u = rng.standard_normal(256)
        c = to_coeffs(u)
        direct = math.sqrt(np.sum((c * np.exp(-(np.arange(1, 257) * math.pi) ** 2 * 0.01)) ** 2))
        got = l2_norm(apply_semigroup(self.op, 0.01, u))
        assert got == pytest.approx(direct, rel=1e-12)
        assert got <= l2_norm(u)

    @settings(max_examples=50, deadline=None)
    @given(s=st.floats(0, 0.1), t=st.floats(0, 0.1))
    def test_semigroup_law(self, s, t):
        u = np.sin(np.arange(1, 257)) + 0.3
        a = to_coeffs(apply_semigroup(self.op, t, apply_semigroup(self.op, s, u)))
        b = to_coeffs(apply_semigroup(self.op, t + s, u))
        assert np.max(np.abs(a - b)) <= 1e-12

    def test_negative_time(self):
        with pytest.raises(DomainError):
            apply_semigroup(self.op, -1e-3, np.ones(256))

    def test_l1_contraction_approximate(self):
        errs = []
        for n in (32, 128, 512):
            op = SpectralOperator(n)
            x = np.arange(1, n + 1) / (n + 1)
            u = np.where(np.abs(x - 0.5) < 0.2, 1.0, 0.0)
            errs.append(max(0.0, l1_norm(apply_semigroup(op, 1e-3, u)) - l1_norm(u)))
        assert errs[-1] <= errs[0] + 1e-15 and errs[-1] < 1e-2


class TestConvolve:
    op = SpectralOperator(32)
    dt = 1e-3

    def test_zero(self):
        phi = np.zeros((11, 32))
        assert np.all(convolve(self.op, phi, self.dt, 0.01).values == 0.0)

    def test_constant_mode_closed_form(self):
        e1 = self.op.eigenfunction(1).values
        phi = np.tile(e1, (101, 1))
        for side in ("left", "right"):
            out = convolve(self.op, phi, self.dt, 0.1, side)
            ref = (1 - math.exp(-math.pi ** 2 * 0.1)) / math.pi ** 2 * e1
            np.testing.assert_allclose(out.values, ref, atol=1e-13)

    def test_linear(self, rng):
        a, b = rng.standard_normal((2, 21, 32))
        lhs = convolve_trajectory(self.op, 2 * a - 3 * b, self.dt)
        rhs = 2 * convolve_trajectory(self.op, a, self.dt) - 3 * convolve_trajectory(self.op, b, self.dt)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_off_grid(self):
        with pytest.raises(DomainError):
            convolve(self.op, np.zeros((11, 32)), self.dt, 0.0105)

    def test_richardson_first_order(self):
        # phi(t, x) = cos(7 t) sin(pi x) + t^2 sin(3 pi x), sampled on two grids
        x = np.arange(1, 33) / 33
        def phi(dt):
            t = np.arange(round(0.2 / dt) + 1)[:, None] * dt
            return np.cos(7 * t) * np.sin(np.pi * x) + t ** 2 * np.sin(3 * np.pi * x)
        r = [convolve(self.op, phi(dt), dt, 0.2).values for dt in (2e-3, 1e-3, 5e-4)]
        e1, e2 = l1_norm(r[0] - r[1]), l1_norm(r[1] - r[2])
        assert e1 / e2 == pytest.approx(2.0, rel=0.1)


class TestModulus:
    def test_constant(self):
        assert equicontinuity_modulus(np.ones((20, 8)), 0.01, 0.05) == 0.0

    def test_semigroup_trajectory_oracle(self):
        op = SpectralOperator(64)
        e1 = op.eigenfunction(1).values
        dt = 1e-3
        t = np.arange(1001) * dt
        traj = np.exp(-math.pi ** 2 * t)[:, None] * e1
        got = equicontinuity_modulus(traj, dt, 0.01)
        e1_l1 = l1_norm(e1)
        ref = max(abs(math.exp(-math.pi ** 2 * t[i]) - math.exp(-math.pi ** 2 * t[j])) * e1_l1
                  for i in range(1001) for j in range(i, min(i + 11, 1001)))
        assert got == pytest.approx(ref, rel=1e-12)

    def test_monotone_in_delta(self, rng):
        traj = np.cumsum(rng.standard_normal((200, 16)), axis=0)
        a, b = equicontinuity_modulus(traj, 0.01, 0.03), equicontinuity_modulus(traj, 0.01, 0.1)
        assert a <= b

    def test_delta_below_step(self):
        with pytest.raises(DomainError):
            equicontinuity_modulus(np.ones((5, 4)), 0.01, 0.005)


class TestField:
    def test_norms_and_arithmetic(self):
        f = Field([1.0, -2.0, 3.0])
        assert f.norm_l1() == pytest.approx(6 / 4) and f.norm_inf() == 3.0
        assert f.norm_l2() == pytest.approx(math.sqrt(14 / 4))
        g = 2 * f - f + (-f)
        assert np.all(g.values == 0.0)
        with pytest.raises(ValueError):
            f.values[0] = 5.0

    def test_from_coeffs(self):
        f = Field.from_coeffs([0.0, 1.0, 0.0, 0.0])
        np.testing.assert_allclose(f.coeffs, [0.0, 1.0, 0.0, 0.0], atol=1e-15)

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            Field([])


class TestTimeGrid:
    def test_steps(self):
        g = TimeGrid(0.25, 1e-3)
        assert g.n_steps == 250 and g.times[-1] == pytest.approx(0.25)
        assert g.refined().n_steps == 500

    @pytest.mark.parametrize("T,dt", [(0.25, 0.004), (0.0, 0.1), (1.0, -0.1), (1.0, math.inf)])
    def test_rejects(self, T, dt):
        with pytest.raises(ConfigError):
            TimeGrid(T, dt)

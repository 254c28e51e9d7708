import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from oracles import bisect_increasing, grid_argmin, legendre_grid
from spde_yosida.errors import ConfigError, DomainError
from spde_yosida.monotone import (
    ConvexPotential, ExpMinusOne, Linear, Power, QuasiShift, Shifted, SignGraph, Tabulated,
    closed_form_resolvent, conjugate, fenchel_gap, lower_section, minimal_section, moreau,
    potential, resolvent, upper_section, yosida,
)

# bisection oracle for y + 0.1 y^3 = 2, frozen before the build
J_CUBIC_01_2 = 1.5945621166311525
YOSIDA_CUBIC_01_2 = 4.0543788336884745
# grid sup over [-30, 30], step 1e-4, of x - (e^x - 1 - x)
FSTAR_EXP_1 = 0.3862943588939204
GAP_CUBIC_1_2 = 0.13988157484230967

GRAPHS = {
    "linear": Linear(1.0),
    "linear0": Linear(0.0),
    "power2": Power(2.0),
    "power3": Power(3.0),
    "sign": SignGraph(),
    "expm1": ExpMinusOne(),
    "shifted": Shifted(SignGraph(), 0.5),
}
SMOOTH = {"linear": Linear(1.0), "power3": Power(3.0), "expm1": ExpMinusOne(), "power2": Power(2.0)}

reals = st.floats(-10.0, 10.0, allow_nan=False)
lams = st.floats(1e-3, 10.0)


class TestExamples:
    def test_linear_resolvent(self):
        assert resolvent(Linear(1.0), 0.5, 3.0) == pytest.approx(2.0, abs=1e-15)
        assert yosida(Linear(1.0), 0.5, 3.0) == pytest.approx(2.0, abs=1e-14)

    def test_sign_resolvent_absorbs(self):
        assert resolvent(SignGraph(), 1.0, 0.5) == 0.0
        assert yosida(SignGraph(), 1.0, 0.5) == 0.5

    def test_cubic_resolvent_oracle(self, backend):
        oracle = bisect_increasing(lambda y: y + 0.1 * y ** 3, 2.0, 0.0, 2.0)
        assert oracle == pytest.approx(J_CUBIC_01_2, abs=1e-12)
        assert resolvent(Power(3.0), 0.1, 2.0) == pytest.approx(J_CUBIC_01_2, abs=1e-12)
        assert yosida(Power(3.0), 0.1, 2.0) == pytest.approx(YOSIDA_CUBIC_01_2, abs=1e-10)

    @pytest.mark.parametrize("g", list(GRAPHS.values()), ids=list(GRAPHS))
    def test_moreau_at_origin(self, g):
        if g.contains_origin:
            assert moreau(g, 0.3, 0.0) == 0.0

    def test_moreau_linear(self):
        assert moreau(Linear(1.0), 1.0, 2.0) == pytest.approx(1.0, abs=1e-15)

    def test_moreau_sign_grid_oracle(self):
        _, best = grid_argmin(lambda y: np.abs(y - 2.0) ** 2 / (2 * 0.5) + np.abs(y), -10.0, 10.0, 1e-4)
        assert best == pytest.approx(1.75, abs=1e-8)
        assert moreau(SignGraph(), 0.5, 2.0) == pytest.approx(1.75, abs=1e-14)

    def test_potentials(self):
        assert potential(Power(3.0), 2.0) == 4.0
        assert potential(SignGraph(), -3.0) == 3.0

    def test_tabulated_potential(self):
        r = np.linspace(-5.0, 5.0, 10001)
        t = Tabulated.from_function(lambda s: s ** 3, r)
        assert potential(t, 2.0) == pytest.approx(4.0, abs=1e-5)
        # the trapezoid rule at the table step is the looser reference
        rr = np.arange(0, 2001) * 1e-3
        assert abs(trapezoid(rr ** 3, rr) - 4.0) < 1e-5

    def test_conjugates(self):
        assert conjugate(ConvexPotential(SignGraph()), 0.5) == 0.0
        assert conjugate(ConvexPotential(SignGraph()), 2.0) == math.inf
        assert conjugate(ConvexPotential(Power(3.0)), 1.0) == pytest.approx(0.75, abs=1e-15)

    def test_expm1_conjugate_oracle(self):
        brute = legendre_grid(lambda x: np.expm1(x) - x, 1.0)
        assert brute == pytest.approx(FSTAR_EXP_1, abs=1e-12)
        assert conjugate(ConvexPotential(ExpMinusOne()), 1.0) == pytest.approx(FSTAR_EXP_1, abs=1e-8)

    def test_fenchel_examples(self):
        p = ConvexPotential(Power(3.0))
        assert fenchel_gap(p, 0.0, 0.0) == 0.0
        assert fenchel_gap(p, 1.0, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert fenchel_gap(p, 1.0, 2.0) == pytest.approx(GAP_CUBIC_1_2, abs=1e-14)
        brute = 0.25 + legendre_grid(lambda x: x ** 4 / 4, 2.0, -10.0, 10.0) - 2.0
        assert brute == pytest.approx(GAP_CUBIC_1_2, abs=1e-8)

    def test_minimal_section(self):
        assert minimal_section(SignGraph(), 0.0) == 0.0
        assert minimal_section(SignGraph(), 1.0) == 1.0
        assert minimal_section(Power(3.0), -2.0) == -8.0


class TestErrors:
    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_input(self, bad):
        with pytest.raises(DomainError):
            resolvent(Power(3.0), 0.1, bad)
        with pytest.raises(DomainError):
            potential(SignGraph(), bad)

    @pytest.mark.parametrize("lam", [0.0, -1.0, math.nan])
    def test_bad_lambda(self, lam):
        with pytest.raises(DomainError):
            yosida(Linear(1.0), lam, 1.0)

    def test_bad_parameters(self):
        with pytest.raises(ConfigError):
            Power(0.5)
        with pytest.raises(ConfigError):
            Linear(-1.0)
        with pytest.raises(ConfigError):
            QuasiShift(Linear(1.0), -0.1)

    def test_quasishift_conjugate_undefined(self):
        with pytest.raises(DomainError):
            conjugate(ConvexPotential(QuasiShift(Linear(1.0), 0.5)), 1.0)

    def test_quasishift_resolvent_needs_small_lambda(self):
        g = QuasiShift(Linear(2.0), 0.5)
        assert resolvent(g, 0.5, 3.0) == pytest.approx(3.0 / (1 + 0.5 * 1.5))
        with pytest.raises(DomainError):
            resolvent(g, 2.0, 1.0)


class TestSections:
    def test_sign_filled_at_zero(self):
        g = SignGraph()
        assert (lower_section(g, 0.0), upper_section(g, 0.0)) == (-1.0, 1.0)
        assert lower_section(g, 2.0) == upper_section(g, 2.0) == 1.0

    @pytest.mark.parametrize("g", list(GRAPHS.values()), ids=list(GRAPHS))
    def test_monotone_and_filled(self, g):
        r = np.linspace(-5, 5, 2001)
        lo, hi = lower_section(g, r), upper_section(g, r)
        assert np.all(lo <= hi)
        assert np.all(hi[:-1] <= lo[1:])

    def test_origin_flag(self):
        assert SignGraph().contains_origin
        assert not Shifted(Linear(1.0), 0.5).contains_origin
        assert Shifted(SignGraph(), 0.5).contains_origin


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(x=reals, y=reals, lam=lams, name=st.sampled_from(sorted(GRAPHS)))
    def test_yosida_lipschitz_monotone(self, x, y, lam, name):
        g = GRAPHS[name]
        fx, fy = yosida(g, lam, x), yosida(g, lam, y)
        assert abs(fx - fy) <= abs(x - y) / lam + 1e-10
        assert (fx - fy) * (x - y) >= -1e-10
        assert abs(fx) <= abs(minimal_section(g, x)) + 1e-10

    @settings(max_examples=300, deadline=None)
    @given(x=reals, y=reals, lam=lams, name=st.sampled_from(sorted(GRAPHS)))
    def test_resolvent_nonexpansive(self, x, y, lam, name):
        g = GRAPHS[name]
        assert abs(resolvent(g, lam, x) - resolvent(g, lam, y)) <= abs(x - y) + 1e-12

    @settings(max_examples=300, deadline=None)
    @given(x=reals, lam=lams, name=st.sampled_from(sorted(GRAPHS)))
    def test_yosida_on_graph_at_resolvent(self, x, lam, name):
        g = GRAPHS[name]
        j, fl = resolvent(g, lam, x), yosida(g, lam, x)
        scale = 1e-14 * (1.0 + abs(x)) / lam
        assert lower_section(g, j) - scale <= fl <= upper_section(g, j) + scale
        on_graph = float(np.clip(fl, lower_section(g, j), upper_section(g, j)))
        assert fenchel_gap(ConvexPotential(g), j, on_graph) <= 1e-8

    @settings(max_examples=200, deadline=None)
    @given(x=reals, lam=lams, name=st.sampled_from(sorted(SMOOTH)))
    def test_moreau_sandwich(self, x, lam, name):
        g = SMOOTH[name]
        a, b, F = moreau(g, lam, x), moreau(g, lam / 2, x), potential(g, x)
        tol = 1e-12 * max(1.0, F)
        assert -tol <= a <= b + tol
        assert b <= F + tol
        assert F - a <= lam * upper_section(g, abs(x)) ** 2 / 2 + 1e-10 * max(1.0, F)

    @settings(max_examples=300, deadline=None)
    @given(x=reals, y=reals, name=st.sampled_from(sorted(GRAPHS)))
    def test_fenchel_young(self, x, y, name):
        gap = fenchel_gap(ConvexPotential(GRAPHS[name]), x, y)
        assert gap >= -1e-10 * max(1.0, abs(x * y))

    @settings(max_examples=200, deadline=None)
    @given(x=reals, name=st.sampled_from(sorted(SMOOTH)))
    def test_fenchel_equality_on_graph(self, x, name):
        g = SMOOTH[name]
        y = lower_section(g, x)
        assert abs(fenchel_gap(ConvexPotential(g), x, y)) <= 1e-8 * max(1.0, abs(x * y))

    @settings(max_examples=100, deadline=None)
    @given(a=reals, b=reals, t=st.floats(0.0, 1.0), name=st.sampled_from(sorted(SMOOTH) + ["sign"]))
    def test_potential_convex(self, a, b, t, name):
        g = GRAPHS[name]
        m = t * a + (1 - t) * b
        lhs = potential(g, m)
        rhs = t * potential(g, a) + (1 - t) * potential(g, b)
        assert lhs <= rhs + 1e-10 * max(1.0, abs(rhs))

    @pytest.mark.parametrize("name", ["power3", "expm1", "linear", "sign"])
    def test_conjugate_coercive(self, name):
        p = ConvexPotential(GRAPHS[name])
        y = np.linspace(0.5, 0.999 if name == "sign" else 50.0, 200)
        fs = conjugate(p, y)
        assert conjugate(p, 0.0) == 0.0 and np.all(fs >= 0.0)
        if name != "sign":
            ratio = fs / y
            assert np.all(np.diff(ratio[20:]) > 0.0)
        else:
            assert conjugate(p, 1.5) == math.inf


class TestClosedForms:
    @pytest.mark.parametrize("g", [Power(3.0), ExpMinusOne(), Power(1.0), Linear(2.0), SignGraph()])
    @pytest.mark.parametrize("lam", [1e-3, 0.1, 1.0, 10.0])
    def test_kernel_matches_closed_form(self, g, lam, backend):
        x = np.linspace(-10, 10, 1001)
        ref = closed_form_resolvent(g, lam, x)
        assert np.max(np.abs(resolvent(g, lam, x) - ref)) <= 1e-12 * max(1.0, np.max(np.abs(x)))

    def test_no_closed_form(self):
        with pytest.raises(DomainError):
            closed_form_resolvent(Power(2.0), 0.1, 1.0)

    def test_array_lambda_matches_scalar(self, backend):
        x = np.linspace(-5, 5, 41)
        lam = np.geomspace(1e-3, 10, 41)
        for g in (Power(3.0), ExpMinusOne(), SignGraph(), Tabulated.from_graph(Power(3.0), np.linspace(-6, 6, 1201))):
            vec = resolvent(g, lam, x)
            one = np.array([resolvent(g, float(l), float(v)) for l, v in zip(lam, x)])
            np.testing.assert_array_equal(vec, one)


class TestTabulated:
    r = np.linspace(-10.0, 10.0, 20001)

    @pytest.mark.parametrize("src", [Linear(1.0), Power(3.0), SignGraph()], ids=["linear", "power3", "sign"])
    @pytest.mark.parametrize("lam", [1e-3, 1e-2, 1.0, 10.0])
    def test_matches_closed_form(self, src, lam, backend):
        t = Tabulated.from_graph(src, self.r)
        x = np.linspace(-10.0, 10.0, 4001)
        assert np.max(np.abs(resolvent(t, lam, x) - closed_form_resolvent(src, lam, x))) <= 1e-10

    @pytest.mark.parametrize("lam", [1e-3, 1.0])
    def test_non_polynomial_source(self, lam, backend):
        # cubic Hermite is not exact here; error is O(step^4)
        t = Tabulated.from_graph(ExpMinusOne(), self.r)
        x = np.linspace(-10.0, 10.0, 4001)
        assert np.max(np.abs(resolvent(t, lam, x) - closed_form_resolvent(ExpMinusOne(), lam, x))) <= 1e-10

    def test_jump_absorbed_at_knot(self):
        t = Tabulated([-1.0, 0.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, 1.0])
        assert resolvent(t, 1.0, 0.7) == 0.0
        assert lower_section(t, 0.0) == -1.0 and upper_section(t, 0.0) == 1.0

    def test_extrapolates_linearly(self):
        t = Tabulated.from_graph(Linear(2.0), np.linspace(-1, 1, 11))
        assert lower_section(t, 5.0) == pytest.approx(10.0)
        assert resolvent(t, 1.0, 30.0) == pytest.approx(10.0)
        assert potential(t, 3.0) == pytest.approx(9.0)

    def test_conjugate_and_gap(self):
        t = Tabulated.from_graph(Power(3.0), np.linspace(-5, 5, 10001))
        y = np.linspace(-20, 20, 101)
        ref = conjugate(ConvexPotential(Power(3.0)), y)
        assert np.max(np.abs(conjugate(ConvexPotential(t), y) - ref)) <= 1e-8
        x = np.linspace(-2, 2, 41)
        assert np.max(np.abs(fenchel_gap(ConvexPotential(t), x, x ** 3))) <= 1e-9

    def test_sign_table_conjugate_is_indicator(self):
        t = Tabulated.from_graph(SignGraph(), np.linspace(-2, 2, 401))
        p = ConvexPotential(t)
        assert conjugate(p, 0.3) == pytest.approx(0.0, abs=1e-10)
        assert conjugate(p, 1.2) == math.inf

    def test_csv_two_and_three_columns(self, tmp_path):
        f = tmp_path / "cube.csv"
        r = np.linspace(-3, 3, 601)
        f.write_text("r,f\n" + "\n".join(f"{a!r},{a ** 3!r}" for a in r.tolist()) + "\n")
        t = Tabulated.from_csv(f)
        assert resolvent(t, 0.1, 2.0) == pytest.approx(J_CUBIC_01_2, abs=1e-10)
        g = tmp_path / "sign.csv"
        g.write_text("-1,-1,-1\n0,-1,1\n1,1,1\n")
        s = Tabulated.from_csv(g)
        assert resolvent(s, 0.5, 0.3) == 0.0

    @pytest.mark.parametrize("text,msg", [
        ("1,2\n0,3\n", "strictly increasing"),
        ("0,2\n1,1\n", "not increasing"),
        ("0,1\nx,y\n", "non-numeric"),
        ("0,1,2,3\n1,2,3,4\n", "2 or 3"),
    ])
    def test_csv_rejects(self, tmp_path, text, msg):
        f = tmp_path / "bad.csv"
        f.write_text(text)
        with pytest.raises(ConfigError, match=msg):
            Tabulated.from_csv(f)

    def test_csv_missing(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            Tabulated.from_csv(tmp_path / "none.csv")


class TestShifted:
    def test_translation_identities(self):
        g, a = SignGraph(), 0.5
        s = Shifted(g, a)
        x = np.linspace(-3, 3, 61)
        np.testing.assert_allclose(yosida(s, 0.2, x), yosida(g, 0.2, x - 0.2 * a) + a, atol=1e-15)
        np.testing.assert_allclose(potential(s, x), np.abs(x) + a * x)
        assert fenchel_gap(ConvexPotential(s), 0.0, 0.2) == 0.0

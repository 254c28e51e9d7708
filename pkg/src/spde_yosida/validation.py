"""Invariant suites on deterministic fixtures, used by ``spde-yosida validate``.

Each check returns a :class:`Check`; sample sizes are smaller than the
acceptance tests so the whole suite runs in a few seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .monotone import (
    ConvexPotential, ExpMinusOne, Linear, Power, Shifted, SignGraph, Tabulated, closed_form_resolvent,
    fenchel_gap, minimal_section, moreau, potential, resolvent, yosida,
)
from .noise import DiffusionSpec, ou_variance, sample_convolution
from .semigroup import SpectralOperator, TimeGrid, apply_semigroup, l2_norm, to_coeffs, to_values


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<34} {self.detail}"


def builtin_graphs():
    table = Tabulated.from_graph(Power(3.0), np.linspace(-10.0, 10.0, 20001))
    return {
        "linear(0)": Linear(0.0), "linear(2.5)": Linear(2.5), "power(1)": Power(1.0), "power(2)": Power(2.0),
        "power(3)": Power(3.0), "sign": SignGraph(), "expm1": ExpMinusOne(), "shifted(sign,0.5)": Shifted(SignGraph(), 0.5),
        "tabulated(r^3)": table,
    }


def triples(n, seed=0, xmax=10.0, lam_range=(1e-3, 10.0)):
    """Scrambled Halton samples ``(x, y, lam)``, ``lam`` log-uniform."""
    pts = qmc.Halton(d=3, seed=seed).random(n)
    x = (2.0 * pts[:, 0] - 1.0) * xmax
    y = (2.0 * pts[:, 1] - 1.0) * xmax
    lo, hi = np.log(lam_range[0]), np.log(lam_range[1])
    return x, y, np.exp(lo + (hi - lo) * pts[:, 2])


def kernel_slacks(g, x, y, lam):
    """Minimum slack of the four Yosida/resolvent inequalities on the given triples."""
    fx, fy = yosida(g, lam, x), yosida(g, lam, y)
    jx, jy = resolvent(g, lam, x), resolvent(g, lam, y)
    d = np.abs(x - y)
    return {
        "lipschitz": float(np.min(d / lam - np.abs(fx - fy))),
        "monotone": float(np.min((fx - fy) * (x - y))),
        "minimal_section": float(np.min(np.abs(minimal_section(g, x)) - np.abs(fx))),
        "nonexpansive": float(np.min(d - np.abs(jx - jy))),
    }


def check_monotone(n=4000, seed=0):
    out = []
    x, y, lam = triples(n, seed)
    for name, g in builtin_graphs().items():
        s = kernel_slacks(g, x, y, lam)
        worst = min(s.values())
        out.append(Check(f"yosida/resolvent [{name}]", worst >= -1e-10, f"min slack {worst:.3g}"))
    table = builtin_graphs()["tabulated(r^3)"]
    xs = np.linspace(-10.0, 10.0, 2001)
    for lam in (1e-2, 1.0):
        err = float(np.max(np.abs(resolvent(table, lam, xs) - closed_form_resolvent(Power(3.0), lam, xs))))
        out.append(Check(f"tabulated resolvent, lambda={lam:g}", err <= 1e-8, f"max error {err:.3g}"))
    for name, g in (("power(3)", Power(3.0)), ("expm1", ExpMinusOne()), ("sign", SignGraph())):
        worst = math.inf
        for lam in (1.0, 0.1, 0.01):
            a, b, F = moreau(g, lam, xs), moreau(g, lam / 2, xs), potential(g, xs)
            worst = min(worst, float(np.min(b - a)), float(np.min(F - b)))
        out.append(Check(f"moreau ordering [{name}]", worst >= -1e-10, f"min slack {worst:.3g}"))
        p = ConvexPotential(g)
        gap = fenchel_gap(p, x, y)
        fin = gap[np.isfinite(gap)]
        out.append(Check(f"fenchel-young >= 0 [{name}]", fin.min() >= -1e-10, f"min finite gap {fin.min():.3g}"))
    return out


def check_semigroup(n_x=256, seed=0):
    op = SpectralOperator(n_x)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n_x)
    c = to_coeffs(u)
    err_law = float(np.max(np.abs(to_coeffs(apply_semigroup(op, 0.01, apply_semigroup(op, 0.02, u)))
                                  - to_coeffs(apply_semigroup(op, 0.03, u)))))
    parseval = abs(float(l2_norm(u)) ** 2 - float(np.sum(c * c)))
    roundtrip = float(np.max(np.abs(to_values(c) - u)))
    E = np.array([op.eigenfunction(k).values for k in range(1, n_x + 1)])
    ortho = float(np.max(np.abs(E @ E.T / (n_x + 1) - np.eye(n_x))))
    contraction = all(float(l2_norm(apply_semigroup(op, t, u))) <= float(l2_norm(u)) for t in (0.0, 1e-4, 1e-2, 1.0))
    return [
        Check("semigroup law", err_law <= 1e-12, f"max coefficient error {err_law:.3g}"),
        Check("L2 contraction", contraction),
        Check("discrete parseval", parseval <= 1e-10, f"error {parseval:.3g}"),
        Check("transform round trip", roundtrip <= 1e-12, f"error {roundtrip:.3g}"),
        Check("eigenfunction orthonormality", ortho <= 1e-10, f"error {ortho:.3g}"),
    ]


def variance_table(spec, op, grid, seeds):
    """Empirical vs exact variance of every mode at ``T`` over the given seeds.

    Rows ``(k, mu, b, exact, empirical, standard_error)``; the standard
    error of ``mean(z^2)`` is ``std(z^2) / sqrt(n)``. Also returns the
    mode-1/mode-2 cross covariance and its standard error.
    """
    zT = np.array([sample_convolution(spec, op, grid, s).coeffs[-1] for s in seeds])
    n = zT.shape[0]
    sq = zT * zT
    emp, se = sq.mean(axis=0), sq.std(axis=0, ddof=1) / math.sqrt(n)
    b = spec.b(op.n_x)
    exact = ou_variance(b, op.mu, grid.T)
    rows = list(zip(range(1, op.n_x + 1), op.mu, b, exact, emp, se))
    cross = zT[:, 0] * zT[:, 1] if op.n_x > 1 else np.zeros(n)
    return rows, float(cross.mean()), float(cross.std(ddof=1) / math.sqrt(n))


def check_noise(samples=2000, K=16):
    op = SpectralOperator(K)
    grid = TimeGrid(0.5, 1e-2)
    spec = DiffusionSpec(gamma=2.0)
    a = sample_convolution(spec, op, grid, 7)
    b = sample_convolution(spec, op, grid, 7)
    rows, cov, cov_se = variance_table(spec, op, grid, range(samples))
    worst = max(abs(e - x) / s for _, _, _, x, e, s in rows)
    return [
        Check("noise determinism", bool(np.array_equal(a.values, b.values))),
        Check("noise starts at zero", bool(np.all(a.coeffs[0] == 0.0))),
        Check("noise variance within 3 SE", worst <= 3.0, f"max |z-score| {worst:.2f} over {K} modes"),
        Check("noise mode independence", abs(cov) <= 3.0 * cov_se, f"cov {cov:.3g}, SE {cov_se:.3g}"),
    ]


def run_all():
    return check_monotone() + check_semigroup() + check_noise()

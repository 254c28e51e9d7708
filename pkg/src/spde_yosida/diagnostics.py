"""Certificates for solution bundles.

Every G_T integral uses the product rule ``h * dt * sum`` over the time
nodes the bundle's scheme reads its drift from (right endpoints for the
semi-implicit scheme, left for exponential Euler), so that the discrete
inequalities mirror the scheme rather than a generic quadrature.
Certificates annotate; they never raise on failure.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .monotone import INF, ConvexPotential, conjugate, fenchel_gap, lower_section, potential, upper_section
from .semigroup import inner, l1_norm, l2_norm

EPS_ZERO = 1e-12
FIELDS = ("name", "value", "bound", "tolerance", "sense", "passed", "scenario_hash", "lambda", "seed", "detail")


def _fmt(x):
    return "%.17g" % x


@dataclass(frozen=True)
class Certificate:
    """``value`` compared against ``bound`` with slack ``tolerance``.

    ``sense`` is ``"<="`` (pass iff ``value <= bound + tolerance``) or
    ``">="`` (pass iff ``value >= bound - tolerance``).
    """

    name: str
    value: float
    bound: float
    tolerance: float
    sense: str = "<="
    scenario_hash: str = ""
    lam: float = math.nan
    seed: int = -1
    detail: str = ""

    def __post_init__(self):
        if self.sense not in ("<=", ">="):
            raise ValueError(f"sense must be '<=' or '>=', got {self.sense!r}")

    @property
    def passed(self):
        if math.isnan(self.value):
            return False
        if self.sense == "<=":
            return bool(self.value <= self.bound + self.tolerance)
        return bool(self.value >= self.bound - self.tolerance)

    @property
    def margin(self):
        """Distance to failure; negative when failing."""
        if self.sense == "<=":
            return self.bound + self.tolerance - self.value
        return self.value - self.bound + self.tolerance

    def to_row(self):
        return {
            "name": self.name, "value": _fmt(self.value), "bound": _fmt(self.bound),
            "tolerance": _fmt(self.tolerance), "sense": self.sense, "passed": str(int(self.passed)),
            "scenario_hash": self.scenario_hash, "lambda": _fmt(self.lam), "seed": str(self.seed),
            "detail": self.detail,
        }

    @classmethod
    def from_row(cls, row):
        return cls(name=row["name"], value=float(row["value"]), bound=float(row["bound"]),
                   tolerance=float(row["tolerance"]), sense=row["sense"], scenario_hash=row["scenario_hash"],
                   lam=float(row["lambda"]), seed=int(row["seed"]), detail=row["detail"])

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        extra = f"  [{self.detail}]" if self.detail else ""
        return f"{mark}  {self.name:<24} value={self.value:.6g} {self.sense} {self.bound:.6g} (tol {self.tolerance:.1g}){extra}"


def write_certificates(path, certificates):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=FIELDS, lineterminator="\n")
        w.writeheader()
        for c in certificates:
            w.writerow(c.to_row())


def read_certificates(path):
    with open(path, newline="") as fh:
        return [Certificate.from_row(r) for r in csv.DictReader(fh)]


def _provenance(bundle):
    sc = bundle.scenario
    return {"scenario_hash": sc.hash(), "lam": bundle.lam, "seed": int(sc.seed)}


def _h(bundle):
    return 1.0 / (bundle.v.shape[1] + 1)


def _time_rows(bundle):
    return slice(1, None) if bundle.quadrature_side == "right" else slice(0, -1)


def space_time_integral(bundle, values):
    """``int_{G_T} values`` by ``h * dt * sum`` on the scheme's time nodes."""
    values = np.asarray(values, dtype=float)
    return float(values[_time_rows(bundle)].sum() * _h(bundle) * bundle.grid.dt)


def running_time_integral(bundle, per_time):
    """``int_0^{t_n} g`` for a per-time series ``g(t_m)``, at every ``t_n``."""
    g = np.asarray(per_time, dtype=float) * bundle.grid.dt
    out = np.zeros_like(g)
    if bundle.quadrature_side == "right":
        out[1:] = np.cumsum(g[1:])
    else:
        out[1:] = np.cumsum(g[:-1])
    return out


def _forcing(bundle):
    """``g`` with ``v' + A v + g = 0`` besides the linear flow: ``zeta - k u``."""
    return bundle.zeta - bundle.k * bundle.u if bundle.k else bundle.zeta


def energy_slack(bundle):
    """``||u0||^2 - 2 int_0^t <g, v> - ||v(t)||^2`` at every grid time."""
    u0 = float(l2_norm(bundle.v[0])) ** 2
    work = running_time_integral(bundle, inner(_forcing(bundle), bundle.v))
    return u0 - 2.0 * work - l2_norm(bundle.v) ** 2


def energy_certificate(bundle, tol=1e-3):
    """Minimum over the grid of the energy-inequality slack; pass if ``>= -tol``."""
    slack = energy_slack(bundle)
    n = int(np.argmin(slack))
    return Certificate("energy", float(slack[n]), 0.0, tol, ">=", detail=f"argmin t={bundle.times[n]:.6g}",
                       **_provenance(bundle))


def _gronwall_envelope(bundle):
    """Rigorous bound ``M(t) >= ||v(t)||^2`` for ``k > 0``.

    From ``zeta v >= F_lam(u) - F_lam(z) >= -F_lam(z)`` and Young's
    inequality on ``k <u, v>``:
    ``M(t) = exp(3 k t) (||u0||^2 + int_0^t 2 int_G F_lam(z) + k ||z||^2)``.
    """
    z = bundle.z.values
    src = 2.0 * inner(bundle.regularized_potential(z), 1.0) + bundle.k * l2_norm(z) ** 2
    return np.exp(3.0 * bundle.k * bundle.times) * (float(l2_norm(bundle.v[0])) ** 2 + running_time_integral(bundle, src))


def bdd_certificates(bundle, tol=1e-3):
    """The three a-priori bounds on ``v``, ``<zeta, v>`` and ``F_lam(u)``.

    For ``k = 0``: (a) ``sup_t ||v|| <= ||u0|| (1 + tol)``,
    (b) ``int_0^t <zeta, v> <= ||u0||^2 + tol``,
    (c) ``int F_lam(u) <= ||u0||^2/2 + int F_lam(z) + tol``.
    For ``k > 0`` each bound is inflated by the Gronwall envelope of
    :func:`_gronwall_envelope` and the name gets a ``_gronwall`` suffix.
    """
    prov = _provenance(bundle)
    u0n = float(l2_norm(bundle.v[0]))
    vn = l2_norm(bundle.v)
    work = running_time_integral(bundle, inner(bundle.zeta, bundle.v))
    Fu = space_time_integral(bundle, bundle.regularized_potential(bundle.u))
    Fz = space_time_integral(bundle, bundle.regularized_potential(bundle.z.values))
    if not bundle.k:
        n = int(np.argmax(vn))
        return (
            Certificate("bdd_a", float(vn[n]), u0n, tol * u0n, "<=", detail=f"argmax t={bundle.times[n]:.6g}", **prov),
            Certificate("bdd_b", float(work.max()), u0n ** 2, tol, "<=", **prov),
            Certificate("bdd_c", u0n ** 2 / 2.0 + Fz - Fu, 0.0, tol, ">=", **prov),
        )
    k = bundle.k
    M = _gronwall_envelope(bundle)
    z2 = l2_norm(bundle.z.values) ** 2
    extra = running_time_integral(bundle, 3.0 * M + z2) * (k / 2.0)
    ratio = vn ** 2 / M
    n = int(np.argmax(ratio))
    return (
        Certificate("bdd_a_gronwall", float(ratio[n]), 1.0, tol, "<=", detail=f"argmax t={bundle.times[n]:.6g}", **prov),
        Certificate("bdd_b_gronwall", float((work - u0n ** 2 / 2.0 - extra).max()), 0.0, tol, "<=", **prov),
        Certificate("bdd_c_gronwall", u0n ** 2 / 2.0 + Fz + float(extra[-1]) - Fu, 0.0, tol, ">=", **prov),
    )


def membership_bound(graph, lam, u, zeta):
    """Pointwise bound ``lam zeta (s - zeta) >= gap(u, zeta)`` for ``s`` in ``f(u)``.

    With ``xi = J_lam u`` and ``zeta = f_lam(u)`` in ``f(xi)``, the gap is the
    Bregman distance ``F(u) - F(xi) - zeta (u - xi)``, and convexity bounds
    it by ``(s - zeta)(u - xi)``; the section ``s`` closest to ``zeta`` is used.
    """
    s = np.where(zeta >= 0.0, lower_section(graph, u), upper_section(graph, u))
    return lam * zeta * (s - zeta)


def graph_membership(bundle, tol=1e-10):
    """Mean Fenchel-Young gap ``F(u) + F*(zeta) - u zeta`` over ``G_T``.

    The recorded bound is the mean of :func:`membership_bound`, which is
    ``O(lam)``; both tend to 0 along a continuation.
    """
    prov = _provenance(bundle)
    pot = ConvexPotential(bundle.graph)
    u, zeta = bundle.u, bundle.zeta
    gap = fenchel_gap(pot, u, zeta)
    rows = gap[_time_rows(bundle)]
    T = bundle.grid.T
    if np.isinf(rows).any():
        n, j = np.argwhere(np.isinf(gap))[0]
        return Certificate("graph_membership", INF, 0.0, tol, "<=", detail=f"infinite gap at step {n}, node {j}", **prov)
    bound = space_time_integral(bundle, membership_bound(bundle.graph, bundle.lam, u, zeta)) / T
    mean = space_time_integral(bundle, gap) / T
    return Certificate("graph_membership", mean, bound, tol, "<=", detail=f"min pointwise gap {float(rows.min()):.3g}", **prov)


def tail_integral(bundle, values, R):
    """``int_{|w| > R} |w|`` over ``G_T``."""
    a = np.abs(np.asarray(values, dtype=float))
    return space_time_integral(bundle, np.where(a > R, a, 0.0))


@dataclass(frozen=True)
class UIProfile:
    """Uniform-integrability table of a ``zeta`` family and the budget check.

    ``tails[i, r]`` is the tail integral of member ``i`` above ``ladder[r]``;
    ``budget_lhs[i] = int F(J u) + int F*(zeta)`` against
    ``budget_rhs[i] = N1 + N2 int |zeta|``.
    """

    lambdas: tuple
    ladder: tuple
    tails: np.ndarray
    budget_lhs: np.ndarray
    budget_rhs: np.ndarray
    N1: float
    N2: np.ndarray
    certificates: tuple = field(default=())

    @property
    def sup_tails(self):
        return self.tails.max(axis=0)

    @property
    def tails_decreasing(self):
        s = self.sup_tails
        return bool(np.all(np.diff(s) <= 0.0))


def ui_profile(bundles, ladder=(1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)):
    """Tail integrals over a ladder of radii and the coercivity budget per member."""
    bundles = tuple(bundles)
    if len(bundles) < 2:
        raise ConfigError("ui_profile needs at least two family members")
    ladder = tuple(float(R) for R in ladder)
    tails = np.array([[tail_integral(b, b.zeta, R) for R in ladder] for b in bundles])
    N1 = float(l2_norm(bundles[0].v[0])) ** 2
    lhs, rhs, N2, certs = [], [], [], []
    for b in bundles:
        pot = ConvexPotential(b.graph)
        left = space_time_integral(b, potential(pot, b.xi) + conjugate(pot, b.zeta))
        n2 = b.z.sup_norm
        right = N1 + n2 * space_time_integral(b, np.abs(b.zeta))
        lhs.append(left)
        rhs.append(right)
        N2.append(n2)
        certs.append(Certificate("ui_budget", left, right, 1e-10 * max(1.0, abs(right)), "<=", **_provenance(b)))
    return UIProfile(tuple(b.lam for b in bundles), ladder, tails, np.array(lhs), np.array(rhs), N1,
                     np.array(N2), tuple(certs))


def bracket_L1(x, y, eps_zero=EPS_ZERO):
    """L1 bracket ``int_{x != 0} sgn(x) y + int_{x = 0} |y|``; ``|x| <= eps_zero`` counts as 0."""
    x = np.asarray(getattr(x, "values", x), dtype=float)
    y = np.asarray(getattr(y, "values", y), dtype=float)
    zero = np.abs(x) <= eps_zero
    integrand = np.where(zero, np.abs(y), np.sign(x) * y)
    return integrand.sum(axis=-1) / (x.shape[-1] + 1)


def _check_pair(a, b):
    if a.v.shape != b.v.shape or not math.isclose(a.grid.dt, b.grid.dt, rel_tol=1e-12):
        raise ConfigError(f"bundles live on different grids: {a.v.shape} vs {b.v.shape}")
    if not np.array_equal(a.z.values, b.z.values):
        raise ConfigError("bundles were computed on different noise paths")


def uniqueness_certificate(a, b, bound=None, tol=1e-6, distance_tol=None):
    """Distance and accretivity checks for two bundles on the same noise path.

    Returns ``(distance, bracket)``. ``distance`` is ``max_n ||v_A - v_B||_1``
    against ``bound``, by default ``||u0_A - u0_B||_1`` (the L1 contraction
    of the flow). ``bracket`` is ``min_n [v_A - v_B, zeta_A - zeta_B]``,
    which accretivity keeps nonnegative; it passes if ``>= -tol``.
    """
    _check_pair(a, b)
    prov = _provenance(a)
    dv = a.v - b.v
    dist = l1_norm(dv)
    if bound is None:
        bound = float(l1_norm(a.v[0] - b.v[0]))
    n = int(np.argmax(dist))
    br = bracket_L1(dv, a.zeta - b.zeta)
    m = int(np.argmin(br))
    return (
        Certificate("uniqueness_distance", float(dist[n]), float(bound), tol if distance_tol is None else distance_tol,
                    "<=", detail=f"{a.scheme} vs {b.scheme}, argmax t={a.times[n]:.6g}", **prov),
        Certificate("uniqueness_bracket", float(br[m]), 0.0, tol, ">=", detail=f"argmin t={a.times[m]:.6g}", **prov),
    )


@dataclass(frozen=True)
class WeakProbe:
    """``moduli[i, d]``: modulus of ``t -> <v(t), phi_i>`` at ``deltas[d]``."""

    deltas: tuple
    moduli: np.ndarray

    @property
    def passed(self):
        m = self.moduli
        return bool(np.all(np.isfinite(m)) and np.all(np.diff(m, axis=1) >= 0.0))


def weak_continuity_probe(trajectory, dt, test_functions, deltas=None):
    """Modulus of continuity of each pairing ``<v(t), phi_i>`` over a ``delta`` ladder.

    ``deltas`` defaults to ``dt * 2**j`` up to a quarter of the horizon.
    """
    v = np.asarray([getattr(p, "values", p) for p in trajectory], dtype=float)
    phis = [np.asarray(getattr(p, "values", p), dtype=float) for p in test_functions]
    if not phis:
        raise ConfigError("weak_continuity_probe needs at least one test function")
    N = v.shape[0] - 1
    if deltas is None:
        deltas, d = [], dt
        while d <= N * dt / 4.0 + 1e-12:
            deltas.append(d)
            d *= 2.0
    deltas = tuple(float(d) for d in deltas)
    out = np.zeros((len(phis), len(deltas)))
    for i, phi in enumerate(phis):
        g = inner(v, phi)
        for jd, d in enumerate(deltas):
            lags = min(int(math.floor(d / dt + 1e-9)), N)
            out[i, jd] = max((float(np.abs(g[l:] - g[:-l]).max()) for l in range(1, lags + 1)), default=0.0)
    return WeakProbe(deltas, out)


def certify(bundle, tol=1e-3):
    """The standard certificate set of one bundle."""
    return (energy_certificate(bundle, tol), *bdd_certificates(bundle, tol), graph_membership(bundle))


def format_report(title, certificates, extra=()):
    lines = [title, "=" * len(title)]
    lines.extend(extra)
    lines.extend(c.line() for c in certificates)
    n_fail = sum(not c.passed for c in certificates)
    lines.append(f"{len(certificates) - n_fail}/{len(certificates)} certificates passed")
    return "\n".join(lines) + "\n"

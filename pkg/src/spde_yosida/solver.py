"""Yosida-regularized mild solver and the lambda -> 0 continuation.

For fixed ``lam`` the unknown ``v = u - z`` solves

    v' + A v + f_lam(v + z) = k (v + z),    v(0) = u0,

with ``z`` the stochastic convolution and ``k >= 0`` the quasi-monotone
constant (``k = 0`` in the monotone case). Two schemes are provided:

``semi_implicit``
    Lie splitting: the linear flow ``S(dt)`` exactly in the sine basis, then
    the pointwise implicit step ``r + dt f_lam(r) = c`` for ``r = v + z``.
    Because the resolvent of ``f_lam`` is
    ``(lam id + dt J_{lam+dt}) / (lam + dt)``, every node costs one resolvent
    evaluation of the original graph. Unconditionally stable in ``lam``.
``exp_euler``
    Exponential Euler on the mild form, exact linear weights
    ``(1 - exp(-mu dt)) / mu``; requires ``dt <= lam``.

A graph ``Shifted(g, alpha)`` is regularized as ``g_lam + alpha``: the
constant drift is integrated exactly through the linear flow, which is what
makes it interchangeable with the forcing ``z - alpha S*1``.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import diagnostics
from .errors import ConfigError, NumericalError, StepSizeError, StiffnessError
from .monotone import MonotoneGraph, QuasiShift, Shifted
from .noise import DiffusionSpec, refine, sample_convolution, shifted_forcing
from .semigroup import (
    Field, SpectralOperator, TimeGrid, convolve_trajectory, l1_norm, to_coeffs, to_values,
)

SCHEMES = ("semi_implicit", "exp_euler")


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything that determines a run, except the regularization parameter.

    ``alpha`` folds a translation of the graph into the forcing
    (``z - alpha S*1``); ``beta`` and ``alpha_A`` are the quasi-monotone
    constants of the drift and of the linear operator.
    """

    graph: MonotoneGraph
    u0: Field
    grid: TimeGrid
    noise: DiffusionSpec = field(default_factory=DiffusionSpec.zero)
    seed: int = 0
    shift: float = 0.0
    lam: float = 1e-2
    lambda0: float = 0.1
    ratio: float = 0.5
    count: int = 8
    scheme: str = "semi_implicit"
    alpha: float = 0.0
    beta: float = 0.0
    alpha_A: float = 0.0
    stride: int = 10
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.lam > 0.0:
            raise ConfigError(f"lambda must be positive, got {self.lam!r}")
        if not (self.lambda0 > 0.0 and 0.0 < self.ratio < 1.0 and int(self.count) == self.count and self.count >= 1):
            raise ConfigError("lambda schedule needs lambda0 > 0, 0 < ratio < 1 and count >= 1")
        if self.beta < 0.0 or self.alpha_A < 0.0:
            raise ConfigError("quasi-monotone constants beta and alpha_A must be >= 0")
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigError(f"output stride must be a positive integer, got {self.stride!r}")

    @property
    def n_x(self):
        return self.u0.n_x

    @property
    def lambdas(self):
        return tuple(self.lambda0 * self.ratio ** j for j in range(int(self.count)))

    def operator(self):
        return SpectralOperator(self.n_x, self.shift)

    def noise_path(self, levels=0):
        """The scenario's stochastic convolution, with the ``alpha`` shift applied.

        ``levels`` bridge refinements halve the step that many times while
        keeping every sample of the coarser paths.
        """
        op = self.operator()
        z = sample_convolution(self.noise, op, self.grid, self.seed)
        for _ in range(levels):
            z = refine(z)
        return shifted_forcing(z, self.alpha, op)

    def refined(self, levels=1):
        """Same scenario with ``dt`` halved ``levels`` times."""
        return replace(self, grid=TimeGrid(self.grid.T, self.grid.dt / 2 ** levels))

    def describe(self):
        return {
            "graph": self.graph.describe(), "n_x": self.n_x, "T": self.grid.T, "dt": self.grid.dt,
            "noise": self.noise.describe(), "seed": self.seed, "shift": self.shift,
            "lambda": self.lam, "schedule": [self.lambda0, self.ratio, int(self.count)],
            "scheme": self.scheme, "alpha": self.alpha, "beta": self.beta, "alpha_A": self.alpha_A,
            "u0": self.meta.get("u0", {"l2": self.u0.norm_l2()}),
        }

    def hash(self):
        """Short content hash used as certificate provenance."""
        blob = json.dumps(self.describe(), sort_keys=True, default=str).encode()
        blob += np.ascontiguousarray(self.u0.values).tobytes()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    """Trajectories of one solve, as ``(N+1, n_x)`` node-value arrays.

    ``zeta`` is ``f_lam(u)`` (including a graph translation), ``xi`` the
    resolvent ``J_lam(u)``; ``(xi, zeta)`` lies on the graph exactly.
    """

    scenario: Scenario
    lam: float
    scheme: str
    k: float
    graph: MonotoneGraph
    core: MonotoneGraph
    drift: float
    z: object
    v: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    certificates: tuple = ()

    @property
    def grid(self):
        return self.z.grid

    @property
    def times(self):
        return self.z.grid.times

    @property
    def u(self):
        return self.v + self.z.values

    @property
    def u0(self):
        return self.scenario.u0

    @property
    def quadrature_side(self):
        """Time nodes the scheme's quadrature uses: ``right`` (implicit) or ``left``."""
        return "right" if self.scheme == "semi_implicit" else "left"

    def regularized_potential(self, x):
        """``F_lam`` of the regularized drift, ``moreau(core) + drift * x``."""
        from .monotone import moreau

        return moreau(self.core, self.lam, x) + self.drift * np.asarray(x)


def decompose(graph):
    """Split nested ``Shifted``/``QuasiShift`` wrappers: ``(core, alpha, beta)``.

    The two wrappers commute, so any nesting order gives the same split.
    """
    alpha = beta = 0.0
    while isinstance(graph, (Shifted, QuasiShift)):
        if isinstance(graph, Shifted):
            alpha += graph.alpha
        else:
            beta += graph.beta
        graph = graph.base
    return graph, alpha, beta


def _check_noise(sc, z, op):
    if z.grid.n_steps != sc.grid.n_steps or not math.isclose(z.grid.dt, sc.grid.dt, rel_tol=1e-12):
        raise ConfigError("noise path and scenario use different time grids")
    if z.mu.shape != op.mu.shape or not np.allclose(z.mu, op.mu):
        raise ConfigError("noise path and scenario use different spectral operators")


def _integrate(sc, lam, z, scheme, k):
    op = sc.operator()
    _check_noise(sc, z, op)
    core, alpha, _ = decompose(sc.graph)
    graph = Shifted(core, alpha) if alpha else core
    dt, N = sc.grid.dt, sc.grid.n_steps
    if scheme == "exp_euler" and dt > lam * (1.0 + 1e-12):
        raise StiffnessError(f"exp_euler needs dt <= lambda (dt={dt}, lambda={lam})")
    if dt * k >= 1.0:
        raise StepSizeError(f"quasi-monotone step needs dt * k < 1 (dt={dt}, k={k})")

    decay = op.multipliers(dt)
    weights = op.step_weights(dt)
    drift_step = alpha * weights * op.constant_coeffs()
    zv = z.values
    v = np.empty((N + 1, op.n_x))
    zeta = np.empty_like(v)
    xi = np.empty_like(v)
    v[0] = sc.u0.values
    n_step = -1

    def on_graph(y, fl):
        # (J u, f_lam u) lies on the graph; clip away rounding at jumps and range ends
        return np.clip(fl, core._lower(y), core._upper(y)) + alpha

    def yosida_pair(u):
        j = core._resolvent(lam, u)
        return j, on_graph(j, (u - j) / lam)

    try:
        xi[0], zeta[0] = yosida_pair(v[0] + zv[0])
        if scheme == "semi_implicit":
            scale = 1.0 - dt * k
            mu_eff = dt / scale
            for n in range(N):
                w = to_values(decay * to_coeffs(v[n]) - drift_step)
                c = (w + zv[n + 1]) / scale
                n_step = n
                y = core._resolvent(lam + mu_eff, c)
                fl = (c - y) / (lam + mu_eff)
                r = c - mu_eff * fl
                v[n + 1] = r - zv[n + 1]
                xi[n + 1] = y
                zeta[n + 1] = on_graph(y, fl)
        else:
            vhat = to_coeffs(v[0])
            for n in range(N):
                n_step = n
                u = v[n] + zv[n]
                src = (zeta[n] - alpha) - k * u
                vhat = decay * vhat - weights * to_coeffs(src) - drift_step
                v[n + 1] = to_values(vhat)
                xi[n + 1], zeta[n + 1] = yosida_pair(v[n + 1] + zv[n + 1])
    except NumericalError as exc:
        raise NumericalError(exc.reason, **exc.context, step=n_step, lam=lam) from exc
    for a in (v, zeta, xi):
        a.setflags(write=False)
    return SolutionBundle(scenario=sc, lam=float(lam), scheme=scheme, k=float(k), graph=graph,
                          core=core, drift=alpha, z=z, v=v, zeta=zeta, xi=xi)


def quasi_constant(sc):
    """``k = alpha_A + beta`` including any ``QuasiShift`` in the graph."""
    return sc.alpha_A + sc.beta + decompose(sc.graph)[2]


def solve_regularized(sc, lam=None, z=None, scheme=None):
    """Solve the regularized equation for one ``lam`` on one noise path."""
    if quasi_constant(sc) != 0.0:
        raise ConfigError("scenario is quasi-monotone; use solve_quasimonotone")
    lam = sc.lam if lam is None else float(lam)
    if not lam > 0.0:
        raise ConfigError(f"lambda must be positive, got {lam!r}")
    return _integrate(sc, lam, sc.noise_path() if z is None else z, scheme or sc.scheme, 0.0)


def solve_quasimonotone(sc, lam=None, z=None, scheme=None):
    """Solve ``v' + A v + f_lam(v + z) = k (v + z)``, ``k = alpha_A + beta``."""
    lam = sc.lam if lam is None else float(lam)
    if not lam > 0.0:
        raise ConfigError(f"lambda must be positive, got {lam!r}")
    return _integrate(sc, lam, sc.noise_path() if z is None else z, scheme or sc.scheme, quasi_constant(sc))


def solve(sc, lam=None, z=None, scheme=None):
    """Dispatch to the monotone or quasi-monotone solver."""
    fn = solve_quasimonotone if quasi_constant(sc) else solve_regularized
    return fn(sc, lam, z, scheme)


def mild_residual(bundle):
    """``max_n || v + S*(zeta - k u) - S u0 ||_1`` with the scheme's quadrature side.

    The drift constant of a translated graph enters ``zeta`` and is
    convolved like the rest, so the residual measures only time-quadrature error.
    """
    sc = bundle.scenario
    op = sc.operator()
    dt = bundle.grid.dt
    forcing = bundle.zeta - bundle.k * bundle.u
    conv = convolve_trajectory(op, forcing, dt, side=bundle.quadrature_side)
    # the constant drift is integrated exactly by both schemes
    if bundle.drift:
        exact = np.asarray([to_values(bundle.drift * w) for w in _const_conv(op, bundle.times)])
        approx = convolve_trajectory(op, np.full_like(forcing, bundle.drift), dt, side=bundle.quadrature_side)
        conv = conv - approx + exact
    free = to_values(np.exp(-np.outer(bundle.times, op.mu)) * to_coeffs(sc.u0.values))
    return float(l1_norm(bundle.v + conv - free).max())


def _const_conv(op, times):
    from .noise import constant_convolution_coeffs

    return constant_convolution_coeffs(op, times)


def refinement_study(sc, lam=None, scheme=None, levels=1):
    """Bundles at ``dt, dt/2, ..., dt/2**levels`` on one refined noise path.

    Coarse runs see the coarse samples of the same Brownian path, so
    differences measure time discretization only.
    """
    raw = sample_convolution(sc.noise, sc.operator(), sc.grid, sc.seed)
    out = []
    for level in range(levels + 1):
        sub = sc.refined(level)
        z = shifted_forcing(raw, sc.alpha, sc.operator())
        out.append(solve(sub, lam, z, scheme))
        if level < levels:
            raw = refine(raw)
    return out


def self_error(sc, lam=None, scheme=None):
    """Richardson estimate of the sup-L1 time error of the ``dt`` solution.

    For a first-order scheme ``e(dt) ~ 2 ||v_dt - v_{dt/2}||``.
    Returns ``(estimate, coarse bundle, fine bundle)``.
    """
    coarse, fine = refinement_study(sc, lam, scheme, 1)
    return 2.0 * coarse_distance(fine.v, coarse.v), coarse, fine


def observed_order(sc, lam=None, scheme=None):
    """``log2`` of successive self-differences over three step sizes."""
    b0, b1, b2 = refinement_study(sc, lam, scheme, 2)
    e1 = coarse_distance(b1.v, b0.v)
    e2 = coarse_distance(b2.v, b1.v)
    return math.log2(e1 / e2), (e1, e2)


def sup_l1_distance(a, b):
    """``max_n ||a(t_n) - b(t_n)||_1`` of two trajectories on the same grid."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ConfigError(f"trajectories live on different grids: {a.shape} vs {b.shape}")
    return float(l1_norm(a - b).max())


def coarse_distance(fine, coarse):
    """Sup-L1 distance after sampling the finer trajectory on the coarse times."""
    fine, coarse = np.asarray(fine), np.asarray(coarse)
    stride, rem = divmod(fine.shape[0] - 1, coarse.shape[0] - 1)
    if rem:
        raise ConfigError("grids are not nested")
    return sup_l1_distance(fine[::stride], coarse)


def test_functions(grid, n_x):
    """Five fixed bounded test functions on ``G_T`` as ``(5, N+1, n_x)``."""
    t = grid.times[:, None] / grid.T
    x = (np.arange(1, n_x + 1) / (n_x + 1))[None, :]
    one = np.ones((t.size, x.size))
    return np.stack([
        one,
        x * one,
        t * one,
        np.sin(math.pi * x) * (1.0 - 0.5 * t),
        (x < 0.5) * one,
    ])


@dataclass(frozen=True, eq=False)
class ContinuationResult:
    """Bundles along the lambda schedule and their Cauchy table."""

    lambdas: tuple
    bundles: tuple
    d: np.ndarray
    weak: np.ndarray
    gap_integrals: np.ndarray
    energy_slack_min: np.ndarray
    errors: tuple = ()

    @property
    def limit(self):
        """Limit candidate: the bundle with the smallest lambda."""
        return self.bundles[-1]

    def rows(self):
        """Cauchy table rows; ``d_j`` and weak columns compare ``lambda_j`` with ``lambda_{j+1}``."""
        out = []
        for j, lam in enumerate(self.lambdas):
            last = j == len(self.lambdas) - 1
            out.append({
                "j": j, "lambda": lam,
                "d_j": None if last else float(self.d[j]),
                "fenchel_gap_integral": float(self.gap_integrals[j]),
                "energy_slack_min": float(self.energy_slack_min[j]),
                **{f"weak_{i + 1}": (None if last else float(self.weak[j, i])) for i in range(self.weak.shape[1])},
            })
        return out


def _solve_job(args):
    sc, lam, z, scheme = args
    return solve(sc, lam, z, scheme)


def continuation(sc, z=None, scheme=None, jobs=1):
    """Run the lambda schedule on one fixed noise path.

    ``d_j = max_n ||v_{lam_j}(t_n) - v_{lam_{j+1}}(t_n)||_1``; the weak
    columns are ``|int (zeta_j - zeta_{j+1}) phi_i|`` for the fixed test
    functions of :func:`test_functions`.
    """
    lams = sc.lambdas
    if len(lams) < 2:
        raise ConfigError("continuation needs a lambda schedule with at least two entries")
    z = sc.noise_path() if z is None else z
    jobs_args = [(sc, lam, z, scheme) for lam in lams]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_solve_job, a) for a in jobs_args]
            results = []
            for f in futures:
                try:
                    results.append(f.result())
                except (NumericalError, ConfigError) as exc:
                    results.append(exc)
    else:
        results = []
        for a in jobs_args:
            try:
                results.append(_solve_job(a))
            except (NumericalError, ConfigError) as exc:
                results.append(exc)
    errors = tuple((lam, r) for lam, r in zip(lams, results) if isinstance(r, Exception))
    pairs = [(lam, b) for lam, b in zip(lams, results) if not isinstance(b, Exception)]
    if len(pairs) < 2:
        raise errors[0][1] if errors else ConfigError("continuation produced fewer than two solutions")
    lams = tuple(lam for lam, _ in pairs)
    bundles = tuple(b for _, b in pairs)
    phis = test_functions(sc.grid, sc.n_x)
    d, weak = [], []
    for a, b in zip(bundles[:-1], bundles[1:]):
        d.append(sup_l1_distance(a.v, b.v))
        weak.append([abs(diagnostics.space_time_integral(a, (a.zeta - b.zeta) * phi)) for phi in phis])
    gaps = [diagnostics.graph_membership(b).value for b in bundles]
    slack = [diagnostics.energy_certificate(b).value for b in bundles]
    return ContinuationResult(lambdas=lams, bundles=bundles, d=np.array(d), weak=np.array(weak),
                              gap_integrals=np.array(gaps), energy_slack_min=np.array(slack), errors=errors)


def initial_profile(n_x, profile="bump", **params):
    """Named initial data on the grid.

    ``mode``: ``amplitude * e_k``; ``bump``: smooth compact bump of given
    ``center``/``width``; ``random``: sine series with ``k**-decay``
    coefficients from ``seed``. ``bump`` and ``random`` are scaled to the
    discrete L2 norm ``norm``.
    """
    x = np.arange(1, n_x + 1) / (n_x + 1)
    if profile == "mode":
        k = int(params.pop("k", 1))
        amp = float(params.pop("amplitude", 1.0))
        vals = amp * math.sqrt(2.0) * np.sin(k * math.pi * x)
        norm = None
    elif profile == "bump":
        c = float(params.pop("center", 0.5))
        w = float(params.pop("width", 0.3))
        if not w > 0.0:
            raise ConfigError("bump width must be positive")
        s = (x - c) / w
        inside = np.abs(s) < 1.0
        vals = np.zeros(n_x)
        vals[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        norm = float(params.pop("norm", 1.0))
    elif profile == "random":
        rng = np.random.Generator(np.random.Philox(key=int(params.pop("seed", 0))))
        decay = float(params.pop("decay", 2.0))
        coeffs = rng.standard_normal(n_x) * np.arange(1, n_x + 1, dtype=float) ** (-decay)
        vals = to_values(coeffs)
        norm = float(params.pop("norm", 1.0))
    else:
        raise ConfigError(f"unknown initial profile {profile!r}; expected mode, bump or random")
    if params:
        raise ConfigError(f"unknown key for initial profile {profile!r}: {sorted(params)[0]!r}")
    u0 = Field(vals)
    if norm is not None:
        if u0.norm_l2() == 0.0:
            raise ConfigError("initial profile vanishes on the grid")
        u0 = u0 * (norm / u0.norm_l2())
    return u0


def with_certificates(bundle, certificates):
    return replace(bundle, certificates=tuple(bundle.certificates) + tuple(certificates))

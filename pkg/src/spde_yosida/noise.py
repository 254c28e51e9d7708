"""Stochastic convolution ``z = S <> (B W)`` sampled exactly in law.

``B`` is diagonal in the eigenbasis, ``B e_k = b_k e_k``, so each spectral
coefficient of ``z`` is an Ornstein-Uhlenbeck process

    dz_k = -mu_k z_k dt + b_k dW_k,    z_k(0) = 0,

advanced by its exact Gaussian recursion. Draws come from a Philox
counter-based generator keyed by ``(seed, level)``; ``level`` is 0 for the
base path and increases with each bridge refinement, so a path and all its
refinements are reproducible from the seed alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError
from .semigroup import TimeGrid, to_values

_MASK64 = (1 << 64) - 1


def _rng(seed, level):
    seed = int(seed)
    if not (0 <= seed <= _MASK64):
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(key=np.array([seed, level], dtype=np.uint64)))


@dataclass(frozen=True)
class DiffusionSpec:
    """Per-mode noise coefficients.

    Either an explicit list ``coefficients`` (zero-padded up to the mode
    count) or the decay law ``b_k = scale * k**(-gamma)``. ``s`` is the
    exponent in the regularity hint ``sum_k b_k^2 mu_k^s``.
    """

    gamma: float | None = 2.0
    scale: float = 1.0
    coefficients: tuple | None = None
    s: float = 0.75

    def __post_init__(self):
        if self.coefficients is not None:
            c = tuple(float(b) for b in self.coefficients)
            if not all(math.isfinite(b) for b in c):
                raise ConfigError("noise coefficients must be finite")
            object.__setattr__(self, "coefficients", c)
        elif self.gamma is None or not math.isfinite(self.gamma):
            raise ConfigError("noise needs either coefficients or a finite decay exponent gamma")
        if not (math.isfinite(self.scale) and self.s >= 0.0):
            raise ConfigError("noise scale must be finite and s >= 0")

    @classmethod
    def zero(cls):
        return cls(gamma=0.0, scale=0.0)

    def b(self, K):
        """``b_k`` for ``k = 1..K``."""
        if self.coefficients is not None:
            c = np.asarray(self.coefficients, dtype=float)
            if c.size > K:
                raise ConfigError(f"{c.size} noise coefficients given but only {K} modes")
            return np.concatenate([c, np.zeros(K - c.size)])
        return self.scale * np.arange(1, K + 1, dtype=float) ** (-self.gamma)

    def describe(self):
        if self.coefficients is not None:
            return {"coefficients": list(self.coefficients), "s": self.s}
        return {"law": "power", "gamma": self.gamma, "scale": self.scale, "s": self.s}


def ou_variance(b, mu, t):
    """Exact ``Var z_k(t) = b_k^2 (1 - exp(-2 mu_k t)) / (2 mu_k)``."""
    b = np.asarray(b, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        v = -np.expm1(-2.0 * mu * t) / (2.0 * mu)
    return b * b * np.where(mu == 0.0, t, v)


@dataclass(frozen=True, eq=False)
class NoisePath:
    """One sampled trajectory of ``z`` on a uniform time grid.

    ``coeffs`` is ``(N+1, K)``, ``values`` the matching node values.
    ``alpha`` records the deterministic shift ``-alpha S*1`` folded in by
    :func:`shifted_forcing`; ``level`` the number of bridge refinements.
    """

    seed: int
    grid: TimeGrid
    b: np.ndarray
    mu: np.ndarray
    coeffs: np.ndarray
    draws: np.ndarray
    s: float = 0.75
    alpha: float = 0.0
    level: int = 0
    values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vals = to_values(self.coeffs)
        for a in (self.b, self.mu, self.coeffs, self.draws, vals):
            a.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def sup_norm(self):
        """``||z||_inf`` over all grid nodes and times."""
        return float(np.abs(self.values).max())

    @property
    def n_steps(self):
        return self.grid.n_steps

    def subsample(self, stride):
        """Every ``stride``-th time of the path, as a path on the coarser grid."""
        stride = int(stride)
        if stride < 1 or self.n_steps % stride:
            raise DomainError(f"stride {stride} does not divide {self.n_steps} steps")
        return replace(self, grid=TimeGrid(self.grid.T, self.grid.dt * stride),
                       coeffs=self.coeffs[::stride].copy(), draws=self.draws[::stride].copy())


def sample_convolution(spec, op, grid, seed):
    """Sample ``z`` with the exact per-mode recursion

    ``z_k(t+dt) = exp(-mu_k dt) z_k(t) + b_k sigma_k eta``,
    ``sigma_k^2 = (1 - exp(-2 mu_k dt)) / (2 mu_k)``, ``eta ~ N(0, 1)``.
    """
    if not isinstance(grid, TimeGrid):
        raise ConfigError("grid must be a TimeGrid")
    K = op.n_x
    b = spec.b(K)
    mu = np.array(op.mu)
    rho = np.exp(-mu * grid.dt)
    sigma = np.sqrt(ou_variance(np.ones(K), mu, grid.dt))
    eta = _rng(seed, 0).standard_normal((grid.n_steps, K))
    z = np.zeros((grid.n_steps + 1, K))
    kick = b * sigma * eta
    for n in range(grid.n_steps):
        z[n + 1] = rho * z[n] + kick[n]
    return NoisePath(seed=int(seed), grid=grid, b=b, mu=mu, coeffs=z, draws=eta, s=spec.s)


def refine(path):
    """Halve the time step, keeping every existing sample.

    Midpoints are drawn from the exact OU bridge: given ``z(t) = a`` and
    ``z(t + dt) = c``, ``z(t + dt/2)`` is Gaussian with mean
    ``rho (a + c) / (1 + rho^2)`` and variance ``b^2 sigma^2 / (1 + rho^2)``,
    where ``rho`` and ``sigma`` belong to the half step.
    """
    if path.alpha != 0.0:
        raise DomainError("refine the noise before applying shifted_forcing")
    half = path.grid.dt / 2.0
    rho = np.exp(-path.mu * half)
    sd = path.b * np.sqrt(ou_variance(np.ones_like(path.mu), path.mu, half) / (1.0 + rho * rho))
    eta = _rng(path.seed, path.level + 1).standard_normal((path.n_steps, path.mu.size))
    a, c = path.coeffs[:-1], path.coeffs[1:]
    mid = rho * (a + c) / (1.0 + rho * rho) + sd * eta
    z = np.empty((2 * path.n_steps + 1, path.mu.size))
    z[0::2] = path.coeffs
    z[1::2] = mid
    return replace(path, grid=TimeGrid(path.grid.T, half), coeffs=z, draws=eta, level=path.level + 1)


def constant_convolution_coeffs(op, times):
    """Coefficients of ``(S * 1)(t)`` for each ``t`` in ``times``, exactly."""
    t = np.asarray(times, dtype=float)[:, None]
    mu = op.mu[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = -np.expm1(-mu * t) / mu
    w = np.where(mu == 0.0, t, w)
    return w * op.constant_coeffs()[None, :]


def shifted_forcing(path, alpha, op):
    """``z - alpha S*1``: fold a graph translation by ``alpha`` into the forcing."""
    alpha = float(alpha)
    if alpha == 0.0:
        return path
    shift = constant_convolution_coeffs(op, path.grid.times)
    return replace(path, coeffs=path.coeffs - alpha * shift, alpha=path.alpha + alpha)


@dataclass(frozen=True)
class BoundednessReport:
    sup_norm: float
    hint: float
    partial_sums: tuple
    diverging: bool


def regularity_hint(b, mu, s):
    """Partial sums ``sum_{k<=K} b_k^2 mu_k^s`` for every ``K``."""
    return np.cumsum(np.asarray(b) ** 2 * np.asarray(mu) ** s)


def boundedness_report(path, ratio=0.99):
    """Sup norm of ``z`` and the truncated regularity hint.

    Never rejects: at finite truncation every path is bounded. ``diverging``
    is raised when the last dyadic block of the hint sum,
    ``sum_{K/2 < k <= K}``, is at least ``ratio`` times the previous block,
    i.e. the partial sums are not settling as ``K`` grows.
    """
    sums = regularity_hint(path.b, path.mu, path.s)
    K = sums.size
    diverging = False
    if K >= 4:
        s4, s2, s1 = sums[K // 4 - 1], sums[K // 2 - 1], sums[-1]
        last, prev = s1 - s2, s2 - s4
        diverging = bool(last > 0.0 and last >= ratio * prev)
    return BoundednessReport(path.sup_norm, float(sums[-1]), tuple(float(v) for v in sums), diverging)

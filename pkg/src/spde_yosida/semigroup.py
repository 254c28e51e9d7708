"""Dirichlet heat semigroup on (0, 1) in the discrete sine basis.

Grid values live on the interior nodes ``x_j = j h``, ``h = 1/(n+1)``,
``j = 1..n``. Spectral coefficients are taken against the orthonormal
eigenfunctions ``e_k(x) = sqrt(2) sin(k pi x)``, ``k = 1..n``, in the
discrete inner product ``h * sum_j``; the DST-I makes this transform exact,
so Parseval holds to rounding. Arrays of shape ``(..., n)`` are treated as
values (or coefficients) along the last axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.fft import dst

from .errors import ConfigError, DomainError

_SQRT2 = math.sqrt(2.0)


def to_coeffs(values):
    """Sine coefficients of grid values (last axis)."""
    values = np.asarray(values, dtype=float)
    h = 1.0 / (values.shape[-1] + 1)
    return dst(values, type=1, axis=-1) * (h / _SQRT2)


def to_values(coeffs):
    """Grid values of a sine expansion (last axis)."""
    return dst(np.asarray(coeffs, dtype=float), type=1, axis=-1) / _SQRT2


def l1_norm(values):
    values = np.asarray(values, dtype=float)
    return np.abs(values).sum(axis=-1) / (values.shape[-1] + 1)


def l2_norm(values):
    values = np.asarray(values, dtype=float)
    return np.sqrt((values * values).sum(axis=-1) / (values.shape[-1] + 1))


def sup_norm(values):
    return np.abs(np.asarray(values, dtype=float)).max(axis=-1)


def inner(u, v):
    """Discrete L2 pairing along the last axis."""
    u = np.asarray(u, dtype=float)
    return (u * np.asarray(v, dtype=float)).sum(axis=-1) / (u.shape[-1] + 1)


@dataclass(frozen=True, eq=False)
class Field:
    """A grid function on the interior nodes, with lazily computed coefficients."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise DomainError("a Field holds a non-empty 1-D array of node values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_coeffs(cls, coeffs):
        return cls(to_values(coeffs))

    @cached_property
    def coeffs(self):
        c = to_coeffs(self.values)
        c.setflags(write=False)
        return c

    @property
    def n_x(self):
        return self.values.size

    @property
    def h(self):
        return 1.0 / (self.values.size + 1)

    @property
    def nodes(self):
        return np.arange(1, self.n_x + 1) * self.h

    def norm_l1(self):
        return float(l1_norm(self.values))

    def norm_l2(self):
        return float(l2_norm(self.values))

    def norm_inf(self):
        return float(sup_norm(self.values))

    def __add__(self, other):
        return Field(self.values + _vals(other))

    def __sub__(self, other):
        return Field(self.values - _vals(other))

    def __mul__(self, a):
        return Field(self.values * float(a))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(-self.values)


def _vals(u):
    return u.values if isinstance(u, Field) else np.asarray(u, dtype=float)


class SpectralOperator:
    """``A = -d^2/dx^2 + shift`` with Dirichlet conditions on (0, 1).

    Eigenvalues ``mu_k = (k pi)^2 + shift``, ``k = 1..n_x``.
    """

    def __init__(self, n_x, shift=0.0):
        if int(n_x) != n_x or n_x < 1:
            raise ConfigError(f"n_x must be a positive integer, got {n_x!r}")
        if not (shift >= 0.0 and math.isfinite(shift)):
            raise ConfigError(f"eigenvalue shift must be finite and >= 0, got {shift!r}")
        self.n_x = int(n_x)
        self.shift = float(shift)
        self.h = 1.0 / (self.n_x + 1)
        self.nodes = np.arange(1, self.n_x + 1) * self.h
        self.modes = np.arange(1, self.n_x + 1)
        self.mu = (self.modes * math.pi) ** 2 + self.shift
        for a in (self.nodes, self.modes, self.mu):
            a.setflags(write=False)

    def __repr__(self):
        return f"SpectralOperator(n_x={self.n_x}, shift={self.shift})"

    def eigenfunction(self, k):
        """``e_k`` at the nodes."""
        return Field(_SQRT2 * np.sin(k * math.pi * self.nodes))

    def multipliers(self, t):
        """``exp(-mu_k t)`` for every mode."""
        t = float(t)
        if not (t >= 0.0):
            raise DomainError(f"semigroup time must be >= 0, got {t!r}")
        return np.exp(-self.mu * t)

    def step_weights(self, dt):
        """``int_0^dt exp(-mu_k s) ds = (1 - exp(-mu_k dt)) / mu_k``."""
        mu = self.mu
        with np.errstate(invalid="ignore", divide="ignore"):
            w = -np.expm1(-mu * dt) / mu
        return np.where(mu == 0.0, dt, w)

    def constant_coeffs(self):
        """Coefficients of the constant function 1 on the grid."""
        return to_coeffs(np.ones(self.n_x))


def apply_semigroup(op, t, u):
    """``S(t) u``: multiply every coefficient by ``exp(-mu_k t)``."""
    m = op.multipliers(t)
    if isinstance(u, Field):
        return Field.from_coeffs(u.coeffs * m)
    return to_values(to_coeffs(u) * m)


def _grid_index(t, dt, n_max):
    n = round(t / dt)
    if abs(n * dt - t) > 1e-9 * max(1.0, abs(t)) or not (0 <= n <= n_max):
        raise DomainError(f"t={t!r} is not a point of the time grid (dt={dt!r}, {n_max} steps)")
    return n


def convolve_trajectory(op, phi, dt, side="left"):
    """``(S * phi)(t_n)`` for every grid time, as an array ``(N+1, n_x)``.

    ``phi`` is ``(N+1, n_x)`` node values at ``t_n = n dt``, read as piecewise
    constant in time: on ``[t_m, t_m+1)`` it equals ``phi(t_m)`` when
    ``side="left"`` and ``phi(t_m+1)`` when ``side="right"``. Each mode is
    integrated exactly against ``exp(-mu_k (t - s))``.
    """
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    if side not in ("left", "right"):
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    phi_hat = to_coeffs(np.asarray([_vals(p) for p in phi]))
    decay = op.multipliers(dt)
    w = op.step_weights(dt)
    out = np.zeros_like(phi_hat)
    src = phi_hat[:-1] if side == "left" else phi_hat[1:]
    for m in range(len(phi_hat) - 1):
        out[m + 1] = decay * out[m] + w * src[m]
    return to_values(out)


def convolve(op, phi, dt, t, side="left"):
    """``(S * phi)(t)`` at a grid time ``t``; see :func:`convolve_trajectory`."""
    n = _grid_index(t, dt, len(phi) - 1)
    return Field(convolve_trajectory(op, list(phi)[: n + 1], dt, side)[n])


def equicontinuity_modulus(trajectory, dt, delta):
    """``max ||w(t) - w(s)||_1`` over grid pairs with ``|t - s| <= delta``."""
    if delta < dt * (1.0 - 1e-12):
        raise DomainError(f"delta={delta!r} is below the time step {dt!r}")
    w = np.asarray([_vals(p) for p in trajectory])
    lags = min(int(math.floor(delta / dt + 1e-9)), len(w) - 1)
    best = 0.0
    for lag in range(1, lags + 1):
        best = max(best, float(l1_norm(w[lag:] - w[:-lag]).max()))
    return best


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_n = n dt`` on ``[0, T]``; ``T/dt`` must be an integer."""

    T: float
    dt: float

    def __post_init__(self):
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise ConfigError(f"horizon T must be positive, got {self.T!r}")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ConfigError(f"time step dt must be positive, got {self.dt!r}")
        n = round(self.T / self.dt)
        if n < 1 or abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ConfigError(f"T/dt must be an integer (T={self.T!r}, dt={self.dt!r})")

    @property
    def n_steps(self):
        return round(self.T / self.dt)

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def refined(self):
        return TimeGrid(self.T, self.dt / 2.0)

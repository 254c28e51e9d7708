"""Maximal monotone graphs on the real line and their convex calculus.

A graph is described by its lower and upper sections ``f-(r) <= f+(r)``;
the value set at ``r`` is the interval between them. Every graph exposes its
resolvent ``J_lam = (id + lam f)^{-1}``, from which the Yosida approximation
and the Moreau envelope follow, and a convex potential ``F`` with ``F(0) = 0``
together with its conjugate ``F*``.

The module-level functions accept scalars or arrays and return the same
shape (a Python float for scalar input).

Examples
--------
>>> g = Power(3)
>>> round(resolvent(g, 0.1, 2.0), 12)
1.594562116631
>>> yosida(SignGraph(), 1.0, 0.5)
0.5
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import lambertw

from . import kernels
from .errors import ConfigError, DomainError

__all__ = [
    "MonotoneGraph", "Linear", "Power", "SignGraph", "ExpMinusOne",
    "Tabulated", "Shifted", "QuasiShift", "ConvexPotential",
    "lower_section", "upper_section", "resolvent", "yosida", "moreau",
    "potential", "conjugate", "fenchel_gap", "minimal_section",
    "closed_form_resolvent",
]

INF = math.inf


def _input(x, name="x"):
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} must be finite")
    return a, a.ndim == 0


def _result(a, scalar):
    return float(a) if scalar else a


def _check_lam(lam):
    a = np.asarray(lam, dtype=float)
    if not np.all((a > 0.0) & np.isfinite(a)):
        raise DomainError(f"lambda must be positive and finite, got {lam!r}")
    return float(a) if a.ndim == 0 else a


def _args(lam, x):
    """Validated ``(lam, x, scalar)``; array ``lam`` is broadcast against ``x``."""
    lam = _check_lam(lam)
    a, scalar = _input(x)
    if isinstance(lam, np.ndarray):
        a, lam = np.broadcast_arrays(a, lam)
        scalar = False
    return lam, a, scalar


def _flat(fn, x, lam):
    """Apply a 1-D kernel to an array of any shape (``lam`` scalar or same shape)."""
    x = np.asarray(x, dtype=float)
    lam = lam if np.ndim(lam) == 0 else np.ravel(lam)
    return fn(x.ravel(), lam).reshape(x.shape)


class MonotoneGraph:
    """Base class. Subclasses implement the underscore methods on arrays."""

    kind = "abstract"

    def _lower(self, r):
        raise NotImplementedError

    def _upper(self, r):
        raise NotImplementedError

    def _resolvent(self, lam, x):
        raise NotImplementedError

    def _potential(self, x):
        raise NotImplementedError

    def _conjugate(self, y):
        raise NotImplementedError

    def describe(self):
        """Plain-dict description used for config echo and hashing."""
        return {"kind": self.kind}

    @property
    def contains_origin(self):
        """Whether ``(0, 0)`` lies on the graph."""
        z = np.zeros(())
        return bool(self._lower(z) <= 0.0 <= self._upper(z))

    def lower(self, r):
        return lower_section(self, r)

    def upper(self, r):
        return upper_section(self, r)


@dataclass(frozen=True)
class Linear(MonotoneGraph):
    """``f(r) = a r`` with ``a >= 0``."""

    a: float = 1.0
    kind = "linear"

    def __post_init__(self):
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise ConfigError(f"linear slope must be finite and >= 0, got {self.a!r}")

    def _lower(self, r):
        return self.a * r

    _upper = _lower

    def _resolvent(self, lam, x):
        return x / (1.0 + lam * self.a)

    def _potential(self, x):
        return 0.5 * self.a * x * x

    def _conjugate(self, y):
        if self.a == 0.0:
            return np.where(y == 0.0, 0.0, INF)
        return y * y / (2.0 * self.a)

    def describe(self):
        return {"kind": self.kind, "a": self.a}


@dataclass(frozen=True)
class Power(MonotoneGraph):
    """``f(r) = r |r|^(p-1)`` with ``p >= 1``; potential ``|r|^(p+1)/(p+1)``."""

    p: float = 3.0
    kind = "power"

    def __post_init__(self):
        if not (self.p >= 1.0 and math.isfinite(self.p)):
            raise ConfigError(f"power exponent must be finite and >= 1, got {self.p!r}")

    def _lower(self, r):
        return np.sign(r) * np.abs(r) ** self.p

    _upper = _lower

    def _resolvent(self, lam, x):
        if self.p == 1.0:
            return x / (1.0 + lam)
        return _flat(lambda v, la: kernels.resolvent_power(v, self.p, la), x, lam)

    def _potential(self, x):
        return np.abs(x) ** (self.p + 1.0) / (self.p + 1.0)

    def _conjugate(self, y):
        q = (self.p + 1.0) / self.p
        return np.abs(y) ** q / q

    def describe(self):
        return {"kind": self.kind, "p": self.p}


@dataclass(frozen=True)
class SignGraph(MonotoneGraph):
    """Filled sign graph: ``f(0) = [-1, 1]``, ``f(r) = sgn r`` otherwise."""

    kind = "sign"

    def _lower(self, r):
        return np.where(r > 0.0, 1.0, -1.0)

    def _upper(self, r):
        return np.where(r < 0.0, -1.0, 1.0)

    def _resolvent(self, lam, x):
        return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)

    def _potential(self, x):
        return np.abs(x)

    def _conjugate(self, y):
        return np.where(np.abs(y) <= 1.0, 0.0, INF)


@dataclass(frozen=True)
class ExpMinusOne(MonotoneGraph):
    """``f(r) = exp(r) - 1``; potential ``exp(r) - 1 - r``."""

    kind = "expm1"

    def _lower(self, r):
        return np.expm1(r)

    _upper = _lower

    def _resolvent(self, lam, x):
        return _flat(kernels.resolvent_expm1, x, lam)

    def _potential(self, x):
        return np.expm1(x) - x

    def _conjugate(self, y):
        with np.errstate(invalid="ignore", divide="ignore"):
            inner = (1.0 + y) * np.log1p(np.maximum(y, -1.0)) - y
        out = np.where(y > -1.0, inner, INF)
        return np.where(y == -1.0, 1.0, out)


@dataclass(frozen=True)
class Shifted(MonotoneGraph):
    """Translated graph ``f(r) = base(r) + alpha``."""

    base: MonotoneGraph
    alpha: float = 0.0
    kind = "shifted"

    def _lower(self, r):
        return self.base._lower(r) + self.alpha

    def _upper(self, r):
        return self.base._upper(r) + self.alpha

    def _resolvent(self, lam, x):
        return self.base._resolvent(lam, x - lam * self.alpha)

    def _potential(self, x):
        return self.base._potential(x) + self.alpha * x

    def _conjugate(self, y):
        return self.base._conjugate(y - self.alpha)

    def describe(self):
        return {"kind": self.kind, "alpha": self.alpha, "base": self.base.describe()}


@dataclass(frozen=True)
class QuasiShift(MonotoneGraph):
    """Quasi-monotone graph ``f(r) = base(r) - beta r``, ``beta >= 0``.

    Only the resolvent for ``lam * beta < 1`` and the (non-convex) potential
    are defined; solvers unwrap it into ``base`` plus a linear source.
    """

    base: MonotoneGraph
    beta: float = 0.0
    kind = "quasishift"

    def __post_init__(self):
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise ConfigError(f"quasi-monotone constant must be >= 0, got {self.beta!r}")

    def _lower(self, r):
        return self.base._lower(r) - self.beta * r

    def _upper(self, r):
        return self.base._upper(r) - self.beta * r

    def _resolvent(self, lam, x):
        c = 1.0 - lam * self.beta
        if np.any(c <= 0.0):
            raise DomainError(f"resolvent of f - beta*id needs lam*beta < 1 (lam={lam}, beta={self.beta})")
        return self.base._resolvent(lam / c, x / c)

    def _potential(self, x):
        return self.base._potential(x) - 0.5 * self.beta * x * x

    def _conjugate(self, y):
        if self.beta == 0.0:
            return self.base._conjugate(y)
        raise DomainError("conjugate is not defined for a non-monotone graph")

    def describe(self):
        return {"kind": self.kind, "beta": self.beta, "base": self.base.describe()}


def _hermite_slopes(r, v):
    """Node slopes for a monotone cubic Hermite interpolant of increasing data.

    Starts from not-a-knot spline derivatives (exact on cubic data) and
    applies the Fritsch-Carlson limiter only where monotonicity would fail.
    """
    if r.size == 2:
        d = (v[1] - v[0]) / (r[1] - r[0])
        return np.array([d, d])
    m = CubicSpline(r, v, bc_type="not-a-knot")(r, 1)
    m = np.maximum(m, 0.0)
    delta = np.diff(v) / np.diff(r)
    for k in range(delta.size):
        if delta[k] == 0.0:
            m[k] = m[k + 1] = 0.0
            continue
        al, be = m[k] / delta[k], m[k + 1] / delta[k]
        s = al * al + be * be
        if s > 9.0:
            tau = 3.0 / math.sqrt(s)
            m[k] = tau * al * delta[k]
            m[k + 1] = tau * be * delta[k]
    return m


class Tabulated(MonotoneGraph):
    """Increasing function given on a table, filled in at jumps.

    Parameters
    ----------
    r : array_like
        Strictly increasing knots.
    lower, upper : array_like
        Section values at the knots. ``upper`` defaults to ``lower``; a knot
        with ``lower < upper`` is a jump and carries the whole interval.

    Between knots the graph is a monotone piecewise-cubic Hermite
    interpolant, built separately on every jump-free run of knots; beyond the
    table it continues linearly with the end slopes.
    """

    kind = "tabulated"

    def __init__(self, r, lower, upper=None, source=None):
        r = np.asarray(r, dtype=float)
        lo = np.asarray(lower, dtype=float)
        hi = lo.copy() if upper is None else np.asarray(upper, dtype=float)
        if r.ndim != 1 or r.size < 2 or lo.shape != r.shape or hi.shape != r.shape:
            raise ConfigError("tabulated graph needs at least two knots and matching value columns")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ConfigError("tabulated graph values must be finite")
        if np.any(np.diff(r) <= 0.0):
            raise ConfigError("tabulated graph knots must be strictly increasing")
        if np.any(lo > hi) or np.any(hi[:-1] > lo[1:]):
            raise ConfigError("tabulated graph values are not increasing")
        self.knots, self.lo, self.hi = r, lo, hi
        self.source = source

        slopes_right = np.empty(r.size)  # slope at knot i seen from segment i
        slopes_left = np.empty(r.size)   # slope at knot i seen from segment i-1
        breaks = [0] + [i for i in range(1, r.size - 1) if lo[i] < hi[i]] + [r.size - 1]
        for a, b in zip(breaks[:-1], breaks[1:]):
            vals = lo[a:b + 1].copy()
            vals[0] = hi[a]
            m = _hermite_slopes(r[a:b + 1], vals)
            slopes_right[a:b] = m[:-1]
            slopes_left[a + 1:b + 1] = m[1:]
        h = np.diff(r)
        y0, y1 = hi[:-1], lo[1:]
        m0, m1 = slopes_right[:-1], slopes_left[1:]
        delta = (y1 - y0) / h
        self.coef = np.column_stack([
            y0, m0, (3.0 * delta - 2.0 * m0 - m1) / h, (m0 + m1 - 2.0 * delta) / (h * h),
        ])
        self.slope_left = float(slopes_right[0])
        self.slope_right = float(slopes_left[-1])
        seg = self.coef
        full = h * (seg[:, 0] + h * (seg[:, 1] / 2 + h * (seg[:, 2] / 3 + h * seg[:, 3] / 4)))
        self._cum = np.concatenate([[0.0], np.cumsum(full)])
        self._p0 = 0.0
        self._p0 = float(self._primitive(np.zeros(())))

    @classmethod
    def from_graph(cls, graph, r):
        """Sample both sections of another graph on the knots ``r``."""
        r = np.asarray(r, dtype=float)
        return cls(r, graph._lower(r), graph._upper(r), source=f"sampled {graph.kind}")

    @classmethod
    def from_function(cls, fn, r):
        r = np.asarray(r, dtype=float)
        return cls(r, np.asarray(fn(r), dtype=float), source="function")

    @classmethod
    def from_csv(cls, path):
        """Read ``r, f(r)`` (or ``r, f_lower, f_upper``) rows; a header line is allowed."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"tabulated graph file not found: {path}")
        rows = []
        with path.open(newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(c) for c in row])
                except ValueError:
                    if not rows and lineno == 1:
                        continue  # header
                    raise ConfigError(f"{path}:{lineno}: non-numeric entry {row!r}") from None
        if not rows or len({len(row) for row in rows}) != 1 or len(rows[0]) not in (2, 3):
            raise ConfigError(f"{path}: expected 2 or 3 numeric columns")
        data = np.array(rows)
        upper = data[:, 2] if data.shape[1] == 3 else None
        return cls(data[:, 0], data[:, 1], upper, source=str(path))

    def describe(self):
        return {"kind": self.kind, "source": self.source, "knots": int(self.knots.size),
                "range": [float(self.knots[0]), float(self.knots[-1])]}

    def _locate(self, r):
        i = np.clip(np.searchsorted(self.knots, r, side="right") - 1, 0, self.knots.size - 2)
        return i, r - self.knots[i]

    def _interp(self, r):
        i, s = self._locate(r)
        c = self.coef[i]
        out = c[..., 0] + s * (c[..., 1] + s * (c[..., 2] + s * c[..., 3]))
        out = np.where(r < self.knots[0], self.lo[0] + self.slope_left * (r - self.knots[0]), out)
        return np.where(r > self.knots[-1], self.hi[-1] + self.slope_right * (r - self.knots[-1]), out)

    def _at_knot(self, r, values, fallback):
        j = np.clip(np.searchsorted(self.knots, r), 0, self.knots.size - 1)
        return np.where(self.knots[j] == r, values[j], fallback)

    def _lower(self, r):
        r = np.asarray(r, dtype=float)
        return self._at_knot(r, self.lo, self._interp(r))

    def _upper(self, r):
        r = np.asarray(r, dtype=float)
        return self._at_knot(r, self.hi, self._interp(r))

    def _resolvent(self, lam, x):
        return _flat(lambda v, la: kernels.resolvent_table(
            v, la, self.knots, self.lo, self.hi, self.coef, self.slope_left, self.slope_right), x, lam)

    def _primitive(self, x):
        x = np.asarray(x, dtype=float)
        i, s = self._locate(x)
        c = self.coef[i]
        inside = self._cum[i] + s * (c[..., 0] + s * (c[..., 1] / 2 + s * (c[..., 2] / 3 + s * c[..., 3] / 4)))
        d = x - self.knots[0]
        out = np.where(x < self.knots[0], d * (self.lo[0] + 0.5 * self.slope_left * d), inside)
        d = x - self.knots[-1]
        out = np.where(x > self.knots[-1], self._cum[-1] + d * (self.hi[-1] + 0.5 * self.slope_right * d), out)
        return out - self._p0

    def _potential(self, x):
        return self._primitive(x)

    def _inverse(self, y):
        """A point ``x`` with ``y`` in the value set at ``x`` (``y`` in range)."""
        r, lo, hi = self.knots, self.lo, self.hi
        x = np.empty_like(y)
        below = y <= lo[0]
        above = y >= hi[-1]
        with np.errstate(divide="ignore", invalid="ignore"):
            x[below] = np.where(self.slope_left > 0.0, r[0] + (y[below] - lo[0]) / self.slope_left, r[0])
            x[above] = np.where(self.slope_right > 0.0, r[-1] + (y[above] - hi[-1]) / self.slope_right, r[-1])
        mid = np.flatnonzero(~(below | above))
        ym = y[mid]
        i = np.clip(np.searchsorted(lo, ym, side="right") - 1, 0, r.size - 1)
        on_knot = ym <= hi[i]
        x[mid[on_knot]] = r[i[on_knot]]
        sel = mid[~on_knot]
        if sel.size:
            j = i[~on_knot]
            c = self.coef[j]
            a = np.zeros(sel.size)
            b = r[j + 1] - r[j]
            target = y[sel]
            for _ in range(100):
                s = 0.5 * (a + b)
                val = c[:, 0] + s * (c[:, 1] + s * (c[:, 2] + s * c[:, 3]))
                low = val < target
                a = np.where(low, s, a)
                b = np.where(low, b, s)
            x[sel] = r[j] + 0.5 * (a + b)
        return x

    def _conjugate(self, y):
        y = np.asarray(y, dtype=float)
        shape = y.shape
        y = y.ravel()
        ymin = -INF if self.slope_left > 0.0 else self.lo[0]
        ymax = INF if self.slope_right > 0.0 else self.hi[-1]
        out = np.full(y.shape, INF)
        ok = (y >= ymin) & (y <= ymax)
        x = self._inverse(y[ok])
        out[ok] = x * y[ok] - self._primitive(x)
        return out.reshape(shape)


@dataclass(frozen=True)
class ConvexPotential:
    """The pair ``(F, F*)`` attached to a graph ``f = dF`` with ``F(0) = 0``."""

    graph: MonotoneGraph

    def F(self, x):
        return potential(self.graph, x)

    def F_star(self, y):
        return conjugate(self, y)


def _graph_of(obj):
    return obj.graph if isinstance(obj, ConvexPotential) else obj


def lower_section(g, r):
    a, scalar = _input(r, "r")
    return _result(g._lower(a), scalar)


def upper_section(g, r):
    a, scalar = _input(r, "r")
    return _result(g._upper(a), scalar)


def resolvent(g, lam, x):
    """``J_lam(x)``: the unique ``y`` with ``x`` in ``y + lam f(y)``."""
    lam, a, scalar = _args(lam, x)
    return _result(g._resolvent(lam, a), scalar)


def yosida(g, lam, x):
    """Yosida approximation ``(x - J_lam x) / lam``."""
    lam, a, scalar = _args(lam, x)
    return _result((a - g._resolvent(lam, a)) / lam, scalar)


def moreau(g, lam, x):
    """Moreau envelope ``min_y |y - x|^2 / (2 lam) + F(y)``, attained at ``J_lam x``."""
    lam, a, scalar = _args(lam, x)
    j = g._resolvent(lam, a)
    return _result((a - j) ** 2 / (2.0 * lam) + g._potential(j), scalar)


def potential(g, x):
    """``F(x) = int_0^x f``, closed form for built-in kinds."""
    a, scalar = _input(x)
    return _result(_graph_of(g)._potential(a), scalar)


def conjugate(p, y):
    """``F*(y) = sup_x (x y - F(x))``; ``inf`` outside the closed range of ``f``."""
    a = np.asarray(y, dtype=float)
    if np.any(np.isnan(a)):
        raise DomainError("y must not be NaN")
    return _result(_graph_of(p)._conjugate(a), a.ndim == 0)


def fenchel_gap(p, x, y):
    """``F(x) + F*(y) - x y >= 0``, zero exactly when ``y`` is in ``f(x)``."""
    g = _graph_of(p)
    xa, sx = _input(x)
    ya = np.asarray(y, dtype=float)
    if np.any(np.isnan(ya)):
        raise DomainError("y must not be NaN")
    fs = g._conjugate(ya)
    with np.errstate(invalid="ignore"):
        gap = np.where(np.isinf(fs), INF, g._potential(xa) + np.where(np.isinf(fs), 0.0, fs) - xa * ya)
    return _result(gap, sx and ya.ndim == 0)


def minimal_section(g, x):
    """Element of ``f(x)`` of least modulus."""
    a, scalar = _input(x)
    return _result(np.clip(0.0, g._lower(a), g._upper(a)), scalar)


def _lambertw_exp(L):
    """Principal ``W(exp(L))`` without overflowing for large ``L``."""
    L = np.asarray(L, dtype=float)
    small = L < 500.0
    w = np.empty_like(L)
    w[small] = lambertw(np.exp(L[small])).real
    big = ~small
    if np.any(big):
        t = L[big] - np.log(L[big])
        for _ in range(50):
            t = t - (t + np.log(t) - L[big]) / (1.0 + 1.0 / t)
        w[big] = t
    return w


def closed_form_resolvent(g, lam, x):
    """Resolvent from explicit formulas, independent of the iterative kernels.

    Available for ``Linear``, ``Power`` with ``p`` in ``{1, 3}``, ``SignGraph``
    and ``ExpMinusOne`` (Lambert W); raises ``DomainError`` otherwise.
    """
    lam, a, scalar = _args(lam, x)
    if isinstance(g, (Linear, SignGraph)):
        out = g._resolvent(lam, a)
    elif isinstance(g, Power) and g.p == 1.0:
        out = a / (1.0 + lam)
    elif isinstance(g, Power) and g.p == 3.0:
        # y^3 + P y + Q = 0 with P = 1/lam > 0: single real root (hyperbolic form)
        P, Q = 1.0 / lam, -a / lam
        k = 2.0 * np.sqrt(P / 3.0)
        out = -k * np.sinh(np.arcsinh(1.5 * Q / P * np.sqrt(3.0 / P)) / 3.0)
    elif isinstance(g, ExpMinusOne):
        out = a + lam - _lambertw_exp(np.log(lam) + a + lam)
    else:
        raise DomainError(f"no closed-form resolvent for {g.kind}")
    return _result(out, scalar)

"""Pure-NumPy resolvent kernels.

Fallback for the compiled ``_kernels`` extension; same signatures, same
algorithms, vectorized over the input array instead of looping in C.
All functions take a 1-D float64 array ``x`` and return a new array;
``lam`` is a scalar or an array with one entry per element of ``x``.
"""
import numpy as np

from .errors import NumericalError

TOL = 1e-13
MAXITER = 200
_EPS = np.finfo(float).eps


def _tol(y):
    return np.maximum(TOL, 8.0 * _EPS * np.abs(y))


def _lam(lam, n):
    return np.broadcast_to(np.asarray(lam, dtype=float), (n,))


def _newton_from_above(y, target, lam, g, dg, name):
    # g convex increasing and y >= root on entry: iterates decrease monotonically
    active = np.ones(y.shape, dtype=bool)
    for _ in range(MAXITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return y
        ya, la = y[idx], lam[idx]
        step = (g(ya, la) - target[idx]) / dg(ya, la)
        ynew = ya - step
        y[idx] = ynew
        active[idx[np.abs(step) <= _tol(ynew)]] = False
    idx = np.flatnonzero(active)
    if idx.size:
        raise NumericalError(f"{name} resolvent did not converge", node=int(idx[0]))
    return y


def resolvent_power(x, p, lam):
    """Solve ``y + lam * sgn(y) |y|**p = x`` for ``p >= 1``."""
    x = np.asarray(x, dtype=float)
    lam = _lam(lam, x.size)
    ax = np.abs(x)
    y = np.minimum(ax, (ax / lam) ** (1.0 / p))
    y = _newton_from_above(
        y, ax, lam,
        lambda t, la: t + la * t ** p,
        lambda t, la: 1.0 + la * p * t ** (p - 1.0),
        "power",
    )
    return np.copysign(np.maximum(y, 0.0), x)


def resolvent_expm1(x, lam):
    """Solve ``y + lam * (exp(y) - 1) = x``."""
    x = np.asarray(x, dtype=float)
    lam = _lam(lam, x.size)
    pos = np.minimum(x, np.log1p(np.maximum(x, 0.0) / lam))
    y = np.where(x >= 0.0, pos, x / (1.0 + lam))
    return _newton_from_above(
        y, x, lam,
        lambda t, la: t + la * np.expm1(t),
        lambda t, la: 1.0 + la * np.exp(t),
        "expm1",
    )


def resolvent_table(x, lam, knots, lo, hi, coef, slope_left, slope_right):
    """Resolvent of a tabulated piecewise-cubic graph.

    ``lo``/``hi`` are the lower/upper section values at the knots, ``coef[i]``
    the local cubic ``c0 + c1 s + c2 s^2 + c3 s^3`` on ``[knots[i], knots[i+1]]``
    and the slopes extend the graph linearly beyond the table.
    """
    x = np.asarray(x, dtype=float)
    lam = _lam(lam, x.size)
    y = np.empty_like(x)

    left = x < knots[0] + lam * lo[0]
    right = x > knots[-1] + lam * hi[-1]
    y[left] = (x[left] - lam[left] * lo[0] + lam[left] * slope_left * knots[0]) / (1.0 + lam[left] * slope_left)
    y[right] = (x[right] - lam[right] * hi[-1] + lam[right] * slope_right * knots[-1]) / (1.0 + lam[right] * slope_right)

    mid = np.flatnonzero(~(left | right))
    xm, lm = x[mid], lam[mid]
    # largest i with knots[i] + lam lo[i] <= x, by bisection on the index
    a_i = np.zeros(mid.size, dtype=np.intp)
    b_i = np.full(mid.size, knots.size - 1, dtype=np.intp)
    while np.any(a_i < b_i):
        m_i = (a_i + b_i + 1) // 2
        ok = knots[m_i] + lm * lo[m_i] <= xm
        a_i = np.where(ok, m_i, a_i)
        b_i = np.where(ok, b_i, m_i - 1)
    i = a_i
    on_knot = xm <= knots[i] + lm * hi[i]
    y[mid[on_knot]] = knots[i[on_knot]]

    sel = mid[~on_knot]
    if sel.size == 0:
        return y
    j = i[~on_knot]
    xs, lam = x[sel], lm[~on_knot]
    r0 = knots[j]
    h = knots[j + 1] - r0
    c0, c1, c2, c3 = coef[j, 0], coef[j, 1], coef[j, 2], coef[j, 3]
    g0 = r0 + lam * hi[j]
    g1 = knots[j + 1] + lam * lo[j + 1]
    a = np.zeros_like(h)
    b = h.copy()
    s = h * (xs - g0) / (g1 - g0)
    active = np.ones(sel.shape, dtype=bool)
    for _ in range(MAXITER):
        k = np.flatnonzero(active)
        if k.size == 0:
            break
        sk = s[k]
        val = r0[k] + sk + lam[k] * (c0[k] + sk * (c1[k] + sk * (c2[k] + sk * c3[k]))) - xs[k]
        neg = val < 0.0
        a[k] = np.where(neg, sk, a[k])
        b[k] = np.where(neg, b[k], sk)
        d = 1.0 + lam[k] * (c1[k] + sk * (2.0 * c2[k] + 3.0 * c3[k] * sk))
        snew = sk - val / d
        outside = (snew < a[k]) | (snew > b[k])
        snew = np.where(outside, 0.5 * (a[k] + b[k]), snew)
        s[k] = snew
        tol = _tol(r0[k] + snew)
        done = (np.abs(snew - sk) <= tol) | (b[k] - a[k] <= tol) | (val == 0.0)
        active[k[done]] = False
    else:
        k = np.flatnonzero(active)
        if k.size:
            raise NumericalError("table resolvent did not converge", node=int(sel[k[0]]))
    y[sel] = r0 + s
    return y

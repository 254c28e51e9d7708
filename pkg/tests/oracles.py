"""Brute-force reference computations, independent of the package kernels."""
import numpy as np


def bisect_increasing(g, target, lo, hi, iters=200):
    """Root of an increasing scalar map ``g`` on ``[lo, hi]``."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def grid_argmin(fn, lo, hi, step):
    y = np.arange(round(lo / step), round(hi / step) + 1) * step
    vals = fn(y)
    i = int(np.argmin(vals))
    return y[i], vals[i]


def legendre_grid(F, y, lo=-30.0, hi=30.0, step=1e-4):
    """``sup_x (x y - F(x))`` on a uniform grid."""
    x = np.arange(round(lo / step), round(hi / step) + 1) * step
    return float(np.max(x * y - F(x)))


def nested_implicit_step(f_lam, c, dt, lo=-1e3, hi=1e3):
    """Solve ``r + dt f_lam(r) = c`` for scalar ``c`` by plain bisection."""
    return bisect_increasing(lambda r: r + dt * f_lam(r), c, lo, hi)

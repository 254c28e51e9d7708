# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled resolvent kernels (see ``_pykernels`` for the reference versions).

``lam`` may be a scalar or an array with one entry per element of ``x``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, cbrt, expm1, log1p, copysign, fmax, fmin

from .errors import NumericalError

cnp.import_array()

cdef double TOL = 1e-13
cdef int MAXITER = 200
cdef double EPS = 2.220446049250313e-16


cdef inline double _tol(double y) nogil:
    return fmax(TOL, 8.0 * EPS * fabs(y))


cdef inline double _pow_m1(double y, double p, int ip) nogil:
    # y**(p-1); repeated products when p is a small integer
    cdef double out = 1.0
    cdef int k
    if ip < 0:
        return pow(y, p - 1.0)
    for k in range(ip - 1):
        out *= y
    return out


cdef _lam_view(lam, Py_ssize_t n):
    return np.ascontiguousarray(np.broadcast_to(np.asarray(lam, dtype=np.float64), (n,)))


def resolvent_power(x, double p, lam_in):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef const double[::1] lv = _lam_view(lam_in, n)
    cdef double lam
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] yv = out
    cdef double ax, y, step, ym1
    cdef int it
    cdef int ip = <int>p if p == <int>p and 1.0 <= p <= 8.0 else -1
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            ax = fabs(xv[i])
            lam = lv[i]
            y = fmin(ax, cbrt(ax / lam) if ip == 3 else pow(ax / lam, 1.0 / p))
            if ax > 0.0:
                for it in range(MAXITER):
                    ym1 = _pow_m1(y, p, ip)
                    step = (y + lam * ym1 * y - ax) / (1.0 + lam * p * ym1)
                    y = y - step
                    if fabs(step) <= _tol(y):
                        break
                else:
                    bad = i
                    break
            yv[i] = copysign(fmax(y, 0.0), xv[i])
    if bad >= 0:
        raise NumericalError("power resolvent did not converge", node=int(bad))
    return out


def resolvent_expm1(x, lam_in):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    cdef const double[::1] lv = _lam_view(lam_in, n)
    cdef double lam
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] yv = out
    cdef double xi, y, step, em1
    cdef int it
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            xi = xv[i]
            lam = lv[i]
            if xi >= 0.0:
                y = fmin(xi, log1p(xi / lam))
            else:
                y = xi / (1.0 + lam)
            for it in range(MAXITER):
                em1 = expm1(y)
                step = (y + lam * em1 - xi) / (1.0 + lam * (em1 + 1.0))
                y = y - step
                if fabs(step) <= _tol(y):
                    break
            else:
                bad = i
                break
            yv[i] = y
    if bad >= 0:
        raise NumericalError("expm1 resolvent did not converge", node=int(bad))
    return out


def resolvent_table(x, lam_in, knots, lo, hi, coef, double slope_left, double slope_right):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] r = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[::1] flo = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] fhi = np.ascontiguousarray(hi, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(coef, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], m = r.shape[0], i, lo_i, hi_i, mid, j
    cdef const double[::1] lv = _lam_view(lam_in, n)
    cdef double lam
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] yv = out
    cdef double xi, h, a, b, s, snew, val, d, g0, g1
    cdef int it
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            xi = xv[i]
            lam = lv[i]
            if xi < r[0] + lam * flo[0]:
                yv[i] = (xi - lam * flo[0] + lam * slope_left * r[0]) / (1.0 + lam * slope_left)
                continue
            if xi > r[m - 1] + lam * fhi[m - 1]:
                yv[i] = (xi - lam * fhi[m - 1] + lam * slope_right * r[m - 1]) / (1.0 + lam * slope_right)
                continue
            # largest j with r[j] + lam*flo[j] <= xi
            lo_i = 0
            hi_i = m - 1
            while lo_i < hi_i:
                mid = (lo_i + hi_i + 1) // 2
                if r[mid] + lam * flo[mid] <= xi:
                    lo_i = mid
                else:
                    hi_i = mid - 1
            j = lo_i
            g0 = r[j] + lam * fhi[j]
            if xi <= g0:
                yv[i] = r[j]
                continue
            g1 = r[j + 1] + lam * flo[j + 1]
            h = r[j + 1] - r[j]
            a = 0.0
            b = h
            s = h * (xi - g0) / (g1 - g0)
            for it in range(MAXITER):
                val = r[j] + s + lam * (c[j, 0] + s * (c[j, 1] + s * (c[j, 2] + s * c[j, 3]))) - xi
                if val < 0.0:
                    a = s
                else:
                    b = s
                d = 1.0 + lam * (c[j, 1] + s * (2.0 * c[j, 2] + 3.0 * c[j, 3] * s))
                snew = s - val / d
                if snew < a or snew > b:
                    snew = 0.5 * (a + b)
                if fabs(snew - s) <= _tol(r[j] + snew) or b - a <= _tol(r[j] + snew) or val == 0.0:
                    s = snew
                    break
                s = snew
            else:
                bad = i
                break
            yv[i] = r[j] + s
    if bad >= 0:
        raise NumericalError("table resolvent did not converge", node=int(bad))
    return out

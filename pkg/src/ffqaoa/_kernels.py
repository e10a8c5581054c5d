"""Compiled fast path: QAOA energy/gradient in the Majorana basis and a dense BFGS.

In the Majorana basis every layer exponential is a product of commuting Givens
rotations on disjoint index pairs, so one layer costs O(N^2) instead of O(N^3).
The occupied-state block ``Phi`` (2N x N, complex) is carried as separate real and
imaginary arrays.
"""

from __future__ import annotations

import numba
import numpy as np

STATUS_GTOL = 0
STATUS_MAXITER = 1
STATUS_PRECISION = 2


@numba.njit(cache=True, nogil=True)
def _rotate(xr, xi, rows, cols, coef, theta, sign):
    for q in range(rows.shape[0]):
        a = coef[q] * theta * sign
        cs = np.cos(a)
        sn = np.sin(a)
        i = rows[q]
        j = cols[q]
        for m in range(xr.shape[1]):
            u = xr[i, m]
            v = xr[j, m]
            xr[i, m] = cs * u + sn * v
            xr[j, m] = cs * v - sn * u
            u = xi[i, m]
            v = xi[j, m]
            xi[i, m] = cs * u + sn * v
            xi[j, m] = cs * v - sn * u


@numba.njit(cache=True, nogil=True)
def _layer_derivative(pr, pi, lr, li, rows, cols, coef):
    # 2 Re Tr(Lambda^dag G Phi) for the pair generator G
    s = 0.0
    for q in range(rows.shape[0]):
        i = rows[q]
        j = cols[q]
        t = 0.0
        for m in range(pr.shape[1]):
            t += lr[i, m] * pr[j, m] + li[i, m] * pi[j, m] - lr[j, m] * pr[i, m] - li[j, m] * pi[i, m]
        s += coef[q] * t
    return 2.0 * s


@numba.njit(cache=True, nogil=True)
def energy(theta, p0r, p0i, mr, mi, xr, xc, xk, zr, zc, zk):
    depth = theta.shape[0] // 2
    pr = p0r.copy()
    pi = p0i.copy()
    for p in range(depth):
        _rotate(pr, pi, zr, zc, zk, theta[depth + p], 1.0)
        _rotate(pr, pi, xr, xc, xk, theta[p], 1.0)
    lr = mr @ pr - mi @ pi
    li = mr @ pi + mi @ pr
    return np.sum(pr * lr) + np.sum(pi * li)


@numba.njit(cache=True, nogil=True)
def energy_grad(theta, p0r, p0i, mr, mi, xr, xc, xk, zr, zc, zk):
    depth = theta.shape[0] // 2
    pr = p0r.copy()
    pi = p0i.copy()
    for p in range(depth):
        _rotate(pr, pi, zr, zc, zk, theta[depth + p], 1.0)
        _rotate(pr, pi, xr, xc, xk, theta[p], 1.0)
    lr = mr @ pr - mi @ pi
    li = mr @ pi + mi @ pr
    e = np.sum(pr * lr) + np.sum(pi * li)
    g = np.zeros(2 * depth)
    # backward sweep: undo each rotation on both the state and the adjoint
    for p in range(depth - 1, -1, -1):
        g[p] = _layer_derivative(pr, pi, lr, li, xr, xc, xk)
        _rotate(pr, pi, xr, xc, xk, theta[p], -1.0)
        _rotate(lr, li, xr, xc, xk, theta[p], -1.0)
        g[depth + p] = _layer_derivative(pr, pi, lr, li, zr, zc, zk)
        _rotate(pr, pi, zr, zc, zk, theta[depth + p], -1.0)
        _rotate(lr, li, zr, zc, zk, theta[depth + p], -1.0)
    return e, g


@numba.njit(cache=True, nogil=True)
def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic interpolant through (a, fa, da), (b, fb, db); nan if none."""
    if a == b:
        return np.nan
    d1 = da + db - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0.0:
        return np.nan
    d2 = np.sqrt(disc)
    if b < a:
        d2 = -d2
    den = db - da + 2.0 * d2
    if den == 0.0:
        return np.nan
    return b - (b - a) * (db + d2 - d1) / den


@numba.njit(cache=True, nogil=True)
def bfgs(x0, gtol, maxiter, p0r, p0i, mr, mi, xr, xc, xk, zr, zc, zk):
    """BFGS with a dense inverse Hessian and a strong-Wolfe line search.

    Returns ``(x, f, g, iterations, evaluations, status)``.  ``status`` is
    STATUS_GTOL when the max-norm of the gradient fell below ``gtol``,
    STATUS_PRECISION when no further decrease could be resolved in double
    precision, and STATUS_MAXITER otherwise.
    """
    nvar = x0.shape[0]
    x = x0.copy()
    f, g = energy_grad(x, p0r, p0i, mr, mi, xr, xc, xk, zr, zc, zk)
    hinv = np.eye(nvar)
    fresh = True
    c1 = 1e-4
    c2 = 0.9
    it = 0
    nfev = 1
    status = STATUS_MAXITER
    while it < maxiter:
        if np.max(np.abs(g)) <= gtol:
            status = STATUS_GTOL
            break
        step = -hinv @ g
        d0 = g @ step
        if d0 >= 0.0:
            hinv = np.eye(nvar)
            fresh = True
            step = -g
            d0 = g @ step
        ok = False
        xn = x
        fn = f
        gn = g
        a_prev = 0.0
        f_prev = f
        d_prev = d0
        a = 1.0
        lo = 0.0
        flo = f
        dlo = d0
        hi = 0.0
        fhi = f
        dhi = d0
        bracketed = False
        for i in range(40):
            xt = x + a * step
            ft, gt = energy_grad(xt, p0r, p0i, mr, mi, xr, xc, xk, zr, zc, zk)
            nfev += 1
            dt = gt @ step
            if ft > f + c1 * a * d0 or (i > 0 and ft >= f_prev):
                lo, flo, dlo, hi, fhi, dhi = a_prev, f_prev, d_prev, a, ft, dt
                bracketed = True
                break
            if abs(dt) <= -c2 * d0:
                ok = True
                xn = xt
                fn = ft
                gn = gt
                break
            if dt >= 0.0:
                lo, flo, dlo, hi, fhi, dhi = a, ft, dt, a_prev, f_prev, d_prev
                bracketed = True
                break
            a_prev = a
            f_prev = ft
            d_prev = dt
            a = 2.0 * a
        if not ok and bracketed:
            for _ in range(60):
                width = abs(hi - lo)
                if width < 1e-18 * max(1.0, abs(lo)):
                    break
                aj = _cubic_min(lo, flo, dlo, hi, fhi, dhi)
                if not (aj == aj) or abs(aj - lo) < 0.1 * width or abs(aj - hi) < 0.1 * width:
                    aj = 0.5 * (lo + hi)
                xt = x + aj * step
                ft, gt = energy_grad(xt, p0r, p0i, mr, mi, xr, xc, xk, zr, zc, zk)
                nfev += 1
                dt = gt @ step
                if ft > f + c1 * aj * d0 or ft >= flo:
                    hi, fhi, dhi = aj, ft, dt
                else:
                    if abs(dt) <= -c2 * d0:
                        ok = True
                        xn = xt
                        fn = ft
                        gn = gt
                        break
                    if dt * (hi - lo) >= 0.0:
                        hi, fhi, dhi = lo, flo, dlo
                    lo, flo, dlo = aj, ft, dt
            if not ok and lo > 0.0 and flo < f:
                ok = True
                xn = x + lo * step
                fn, gn = energy_grad(xn, p0r, p0i, mr, mi, xr, xc, xk, zr, zc, zk)
                nfev += 1
        if not ok:
            if fresh:
                status = STATUS_PRECISION
                break
            hinv = np.eye(nvar)
            fresh = True
            continue
        s = xn - x
        y = gn - g
        x = xn
        f = fn
        g = gn
        it += 1
        sy = s @ y
        if sy > 1e-300:
            if fresh:
                hinv = np.eye(nvar) * (sy / (y @ y))
                fresh = False
            hy = hinv @ y
            rho = 1.0 / sy
            coef = rho * rho * (y @ hy) + rho
            for r in range(nvar):
                for c in range(nvar):
                    hinv[r, c] += -rho * (s[r] * hy[c] + hy[r] * s[c]) + coef * s[r] * s[c]
    return x, f, g, it, nfev, status

"""Parity-resolved many-body gaps, gap scans and high-precision minimum-gap refinement.

In the Majorana basis the generator of ``H(s)`` is ``[[0, X], [-X^T, 0]]`` with ``X``
cyclic lower bidiagonal::

    X[j, j]     = (1 - s) h
    X[j+1, j]   = -s J_j
    X[0, N-1]   = (-1)^p s J_N

The quasiparticle energies are the singular values of ``X`` and the vacuum parity
is the sign of ``det X``.  This N x N form is what the scans and the arbitrary
precision refinement use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
import numpy as np
from scipy.optimize import minimize_scalar

from .nambu import CouplingConfig, FermionParity

SECTORS = (FermionParity.EVEN, FermionParity.ODD)
# double-precision gaps below this are treated as roundoff-limited
FLOOR_GAP = 1e-10


def majorana_block(config: CouplingConfig, s: float, sector: FermionParity) -> np.ndarray:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    n = config.n_sites
    jj = config.j
    x = np.zeros((n, n))
    x[np.arange(n), np.arange(n)] = (1.0 - s) * config.field_h
    x[np.arange(1, n), np.arange(n - 1)] = -s * jj[:-1]
    x[0, n - 1] += FermionParity.parse(sector).sign * s * jj[-1]
    return x


def sector_levels(config: CouplingConfig, s: float, sector: FermionParity) -> tuple[float, float]:
    """The two lowest physical energies of ``H(s)`` restricted to ``sector``."""
    sector = FermionParity.parse(sector)
    x = majorana_block(config, s, sector)
    eps = np.linalg.svd(x, compute_uv=False)[::-1]
    eps[eps < 1e-12] = 0.0
    sign, _ = np.linalg.slogdet(x)
    vacuum = FermionParity.EVEN if sign > 0 else FermionParity.ODD
    ev = -float(eps.sum())
    if sign == 0 or vacuum == sector:
        return ev, ev + 2.0 * (eps[0] + eps[1])
    return ev + 2.0 * eps[0], ev + 2.0 * eps[1]


def lowest_levels(config: CouplingConfig, s: float, sector: FermionParity | None = None) -> list[tuple[float, FermionParity]]:
    """The two lowest (energy, sector) pairs, across both sectors unless one is given."""
    sectors = SECTORS if sector is None else (FermionParity.parse(sector),)
    levels = [(e, p) for p in sectors for e in sector_levels(config, s, p)]
    levels.sort(key=lambda t: (t[0], int(t[1])))
    return levels[:2]


def many_body_gap(config: CouplingConfig, s: float, sector: FermionParity | None = None) -> float:
    """``E_1 - E_0``.  Both parity sectors by default; a single sector if given.

    In the ordered phase the two sectors hold the exponentially split Z2 doublet, so
    the both-sector gap vanishes there; the annealing bottleneck is a feature of the
    single-sector (even) gap.
    """
    (e0, _), (e1, _) = lowest_levels(config, s, sector)
    return max(e1 - e0, 0.0)


@dataclass(frozen=True)
class GapPoint:
    s: float
    gap: float
    sector_e0: FermionParity
    sector_e1: FermionParity


@dataclass(frozen=True)
class GapScan:
    points: tuple[GapPoint, ...]
    sector: FermionParity | None = None

    @property
    def argmin(self) -> int | None:
        if not self.points:
            return None
        return int(np.argmin([p.gap for p in self.points]))

    @property
    def delta_min(self) -> float | None:
        i = self.argmin
        return None if i is None else self.points[i].gap

    @property
    def s_min(self) -> float | None:
        i = self.argmin
        return None if i is None else self.points[i].s

    def pairs(self) -> list[tuple[float, float]]:
        return [(p.s, p.gap) for p in self.points]


def gap_scan(config: CouplingConfig, s_grid: Iterable[float], sector: FermionParity | None = None) -> GapScan:
    pts = []
    for s in s_grid:
        s = float(s)
        (e0, p0), (e1, p1) = lowest_levels(config, s, sector)
        pts.append(GapPoint(s, max(e1 - e0, 0.0), p0, p1))
    return GapScan(tuple(pts), None if sector is None else FermionParity.parse(sector))


@dataclass(frozen=True)
class Bottleneck:
    """Location and size of the minimum gap.

    ``s_min`` and ``delta_min`` are mpmath numbers when refined at high precision;
    ``log10_delta`` is always a float.
    """

    s_min: object
    delta_min: object
    log10_delta: float
    sector: FermionParity | None
    precision_digits: int

    @property
    def s(self) -> float:
        return float(self.s_min)


def refine_bottleneck(
    config: CouplingConfig,
    bracket: tuple[float, float],
    sector: FermionParity | None = FermionParity.EVEN,
    xatol: float = 1e-13,
) -> Bottleneck:
    """Double-precision bounded minimization of the gap inside ``bracket``."""
    res = minimize_scalar(
        lambda s: many_body_gap(config, s, sector),
        bounds=bracket,
        method="bounded",
        options={"xatol": xatol, "maxiter": 500},
    )
    d = float(res.fun)
    return Bottleneck(float(res.x), d, math.log10(d) if d > 0 else -math.inf, sector, 16)


def find_bottleneck(
    config: CouplingConfig,
    s_grid: Sequence[float] | None = None,
    sector: FermionParity | None = FermionParity.EVEN,
    precise: bool = False,
) -> Bottleneck:
    """Grid scan, then local refinement around every grid local minimum.

    Near an avoided crossing the gap is V-shaped with an O(1) slope, so the vertex
    can sit between grid points at a value well above a shallow smooth minimum
    elsewhere.  Every grid local minimum is therefore refined in double precision
    and the lowest wins.  ``precise=True`` continues in arbitrary precision (single
    sector) on every candidate that reached the double-precision floor.
    """
    grid = np.linspace(0.0, 1.0, 501) if s_grid is None else np.asarray(s_grid, dtype=float)
    if grid.size < 3:
        raise ValueError("need at least three grid points")
    if precise and sector is None:
        raise ValueError("precise refinement works within one parity sector")
    g = np.array([p.gap for p in gap_scan(config, grid, sector).points])
    padded = np.r_[np.inf, g, np.inf]
    minima = np.flatnonzero((g <= padded[:-2]) & (g <= padded[2:]))
    brackets = [(float(grid[max(i - 1, 0)]), float(grid[min(i + 1, grid.size - 1)])) for i in minima]
    refined = [refine_bottleneck(config, br, sector) for br in brackets]
    best = min(range(len(refined)), key=lambda k: refined[k].delta_min)
    if not precise:
        return refined[best]
    floor = [k for k in range(len(refined)) if refined[k].delta_min < FLOOR_GAP] or [best]
    exact = [precise_bottleneck(config, brackets[k], sector) for k in floor]
    return min(exact, key=lambda b: b.log10_delta)


# arbitrary precision ---------------------------------------------------------


def _mp_tridiag_factor(sub, diag, sup):
    """LU with partial pivoting of a tridiagonal matrix (LAPACK gttrf layout)."""
    n = len(diag)
    d = list(diag)
    du = list(sup) + [mpmath.mpf(0)]
    dl = list(sub)
    du2 = [mpmath.mpf(0)] * n
    piv = list(range(n))
    for i in range(n - 1):
        if abs(d[i]) >= abs(dl[i]):
            if d[i] == 0:
                raise ZeroDivisionError("singular tridiagonal matrix")
            f = dl[i] / d[i]
            dl[i] = f
            d[i + 1] = d[i + 1] - f * du[i]
        else:
            f = d[i] / dl[i]
            d[i] = dl[i]
            dl[i] = f
            t = du[i]
            du[i] = d[i + 1]
            d[i + 1] = t - f * d[i + 1]
            if i < n - 2:
                du2[i] = du[i + 1]
                du[i + 1] = -f * du[i + 1]
            piv[i] = i + 1
    if d[n - 1] == 0:
        raise ZeroDivisionError("singular tridiagonal matrix")
    return dl, d, du, du2, piv


def _mp_tridiag_solve(fac, b):
    dl, d, du, du2, piv = fac
    n = len(d)
    x = list(b)
    for i in range(n - 1):
        if piv[i] == i:
            x[i + 1] = x[i + 1] - dl[i] * x[i]
        else:
            t = x[i]
            x[i] = x[i + 1]
            x[i + 1] = t - dl[i] * x[i]
    x[n - 1] = x[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return x


class _PeriodicJacobi:
    """Symmetric ``[[0, X], [X^T, 0]]`` in the interleaved order (a_1, b_1, a_2, ...).

    Zero diagonal, off-diagonal ``off[k]`` between k and k+1, and ``corner`` between
    the last and first index.  Its eigenvalues are plus/minus the singular values of X.
    """

    def __init__(self, config: CouplingConfig, s, sector: FermionParity):
        n = config.n_sites
        one = mpmath.mpf(1)
        s = mpmath.mpf(s)
        h = mpmath.mpf(config.field_h)
        jj = [mpmath.mpf(v) for v in config.couplings]
        self.n_sites = n
        self.diag_x = (one - s) * h
        self.sub_x = [-s * jj[k] for k in range(n - 1)]
        self.corner_x = FermionParity.parse(sector).sign * s * jj[n - 1]
        off = []
        for k in range(n):
            off.append(self.diag_x)
            if k < n - 1:
                off.append(self.sub_x[k])
        self.off = off
        self.corner = self.corner_x
        self.size = 2 * n

    def det_x(self):
        n = self.n_sites
        prod_d = self.diag_x**n
        prod_l = mpmath.fprod(self.sub_x) if self.sub_x else mpmath.mpf(1)
        return prod_d + (-1) ** (n + 1) * self.corner_x * prod_l

    def matvec(self, v):
        m = self.size
        out = [mpmath.mpf(0)] * m
        for k in range(m - 1):
            out[k] += self.off[k] * v[k + 1]
            out[k + 1] += self.off[k] * v[k]
        out[0] += self.corner * v[m - 1]
        out[m - 1] += self.corner * v[0]
        return out

    def shifted_solver(self, shift):
        """Returns ``r -> (S - shift)^{-1} r`` using Woodbury for the two corner entries."""
        m = self.size
        diag = [-shift] * m
        fac = _mp_tridiag_factor(self.off, diag, self.off)
        c = self.corner
        if c == 0:
            return lambda r: _mp_tridiag_solve(fac, r)
        e0 = [mpmath.mpf(0)] * m
        e0[0] = mpmath.mpf(1)
        en = [mpmath.mpf(0)] * m
        en[m - 1] = mpmath.mpf(1)
        y0 = _mp_tridiag_solve(fac, e0)
        yn = _mp_tridiag_solve(fac, en)
        # small = C^{-1} + U^T T^{-1} U with U = [e_0, e_{m-1}], C = [[0, c], [c, 0]]
        a11, a12 = y0[0], yn[0] + 1 / c
        a21, a22 = y0[m - 1] + 1 / c, yn[m - 1]
        det = a11 * a22 - a12 * a21

        def solve(r):
            x = _mp_tridiag_solve(fac, r)
            u0, u1 = x[0], x[m - 1]
            w0 = (a22 * u0 - a12 * u1) / det
            w1 = (-a21 * u0 + a11 * u1) / det
            return [x[k] - y0[k] * w0 - yn[k] * w1 for k in range(m)]

        return solve


def _dot(u, v):
    return mpmath.fsum(a * b for a, b in zip(u, v))


def _orthonormalize(vs):
    out = []
    for v in vs:
        w = list(v)
        for _ in range(2):
            for q in out:
                c = _dot(q, w)
                w = [a - c * b for a, b in zip(w, q)]
        nrm = mpmath.sqrt(_dot(w, w))
        out.append([a / nrm for a in w])
    return out


def _sym2_eig(a, b, d):
    """Eigenvalues (ascending) of [[a, b], [b, d]] without cancellation in the splitting."""
    mean = (a + d) / 2
    half = mpmath.sqrt(((a - d) / 2) ** 2 + b * b)
    return mean - half, mean + half, 2 * half


def mp_sector_levels(config: CouplingConfig, s, sector: FermionParity, max_iter: int = 60):
    """Lowest two sector energies' ingredients at the working mpmath precision.

    Returns ``(eps1, eps2, splitting, vacuum_parity)`` where ``splitting = eps2 - eps1``
    is computed directly from the Rayleigh-Ritz pencil, so an exponentially small
    splitting keeps full relative accuracy.
    """
    sector = FermionParity.parse(sector)
    jac = _PeriodicJacobi(config, s, sector)
    m = jac.size
    # seed subspace and shift from double precision
    dense = np.zeros((m, m))
    off = np.array([float(v) for v in jac.off])
    dense[np.arange(m - 1), np.arange(1, m)] = off
    dense[np.arange(1, m), np.arange(m - 1)] = off
    dense[0, m - 1] = dense[m - 1, 0] = float(jac.corner)
    w, v = np.linalg.eigh(dense)
    pos = np.argsort(np.abs(w))
    # the two smallest positive eigenvalues
    idx = [i for i in np.argsort(w) if w[i] >= 0][:2]
    if len(idx) < 2:
        idx = list(pos[:2])
    shift = mpmath.mpf((w[idx[0]] + w[idx[1]]) / 2)
    basis = _orthonormalize([[mpmath.mpf(float(x)) for x in v[:, i]] for i in idx])
    solve = jac.shifted_solver(shift)
    tol = mpmath.mpf(10) ** (-(mpmath.mp.dps - 8))
    scale = max(abs(x) for x in jac.off + [jac.corner])
    for _ in range(max_iter):
        basis = _orthonormalize([solve(b) for b in basis])
        sb = [jac.matvec(b) for b in basis]
        a11 = _dot(basis[0], sb[0])
        a12 = (_dot(basis[0], sb[1]) + _dot(basis[1], sb[0])) / 2
        a22 = _dot(basis[1], sb[1])
        res = max(
            max(abs(sb[k][i] - (basis[0][i] * (a11 if k == 0 else a12) + basis[1][i] * (a12 if k == 0 else a22))) for i in range(m))
            for k in range(2)
        )
        if res <= tol * scale:
            break
    else:
        raise ArithmeticError("inverse iteration did not converge")
    e1, e2, split = _sym2_eig(a11, a12, a22)
    if abs(float(e1) - w[idx[0]]) > 1e-8 or abs(float(e2) - w[idx[1]]) > 1e-8:
        raise ArithmeticError("refined levels drifted away from the double-precision seeds")
    det = jac.det_x()
    vacuum = FermionParity.EVEN if det > 0 else FermionParity.ODD
    return e1, e2, split, vacuum


def mp_sector_gap(config: CouplingConfig, s, sector: FermionParity):
    e1, e2, split, vacuum = mp_sector_levels(config, s, sector)
    if vacuum == FermionParity.parse(sector):
        return 2 * (e1 + e2)
    return 2 * split


def _brent_min(f, a, b, tol, max_iter=400):
    """Brent's parabolic/golden minimizer on [a, b] in mpmath arithmetic."""
    cgold = (3 - mpmath.sqrt(5)) / 2
    x = w = v = a + cgold * (b - a)
    fx = fw = fv = f(x)
    d = e = mpmath.mpf(0)
    for _ in range(max_iter):
        xm = (a + b) / 2
        tol1 = tol * abs(x) + tol
        tol2 = 2 * tol1
        if abs(x - xm) <= tol2 - (b - a) / 2:
            break
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2 * (q - r)
            if q > 0:
                p = -p
            q = abs(q)
            etemp = e
            e = d
            if abs(p) >= abs(q * etemp / 2) or p <= q * (a - x) or p >= q * (b - x):
                e = (a - x) if x >= xm else (b - x)
                d = cgold * e
            else:
                d = p / q
                u = x + d
                if u - a < tol2 or b - u < tol2:
                    d = tol1 if xm - x >= 0 else -tol1
        else:
            e = (a - x) if x >= xm else (b - x)
            d = cgold * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d >= 0 else -tol1)
        fu = f(u)
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v = u
                fv = fu
    return x, fx


def precise_bottleneck(
    config: CouplingConfig,
    bracket: tuple[float, float],
    sector: FermionParity = FermionParity.EVEN,
    dps: int | None = None,
) -> Bottleneck:
    """Minimum single-sector gap inside ``bracket`` at arbitrary precision.

    The squared gap is analytic and locally quadratic around an avoided crossing,
    so Brent's parabolic steps converge quickly on it.  The working precision grows
    with N and is raised again if the minimum approaches the precision floor.
    """
    digits = dps if dps is not None else 40 + config.n_sites // 2
    for _ in range(4):
        with mpmath.workdps(digits):
            f = lambda s: mp_sector_gap(config, s, sector) ** 2
            a, b = mpmath.mpf(bracket[0]), mpmath.mpf(bracket[1])
            s_min, f_min = _brent_min(f, a, b, mpmath.mpf(10) ** (-(digits - 10)))
            delta = mpmath.sqrt(f_min)
            log10 = float(mpmath.log10(delta)) if delta > 0 else -math.inf
            if log10 > -(digits - 25):
                return Bottleneck(+s_min, +delta, log10, FermionParity.parse(sector), digits)
        digits = 2 * digits
    raise ArithmeticError("minimum gap below the reachable precision")

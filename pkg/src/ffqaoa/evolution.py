"""Digitized QAOA evolution in the Nambu representation.

A depth-P circuit is ``U(theta) = U_P ... U_1 U_0`` with
``U_p = exp(-2i tx_p H_x) exp(-2i tz_p H_z)``; the energy is
``Tr(U^dag H(s_T) U Gamma)``.  Since ``Gamma`` keeps the last N columns only,
everything is carried on the occupied block ``Phi = U[:, N:]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from . import _kernels
from .nambu import (
    CouplingConfig,
    FermionParity,
    MatrixKind,
    NambuMatrix,
    build_h,
    build_hx,
    build_hz,
    omega,
    reflection_operator,
    unitary,
)

IMAG_TOL = 1e-10
STRUCTURE_TOL = 1e-10


class ThoulessSingularError(np.linalg.LinAlgError):
    """The evolved state is orthogonal to the reference vacuum (U block singular)."""


@dataclass(frozen=True)
class QaoaParams:
    thetas_x: tuple[float, ...]
    thetas_z: tuple[float, ...]
    s_target: float = 1.0

    def __post_init__(self) -> None:
        tx = tuple(float(t) for t in np.asarray(self.thetas_x, dtype=float).ravel())
        tz = tuple(float(t) for t in np.asarray(self.thetas_z, dtype=float).ravel())
        if len(tx) != len(tz) or len(tx) < 1:
            raise ValueError(f"need P >= 1 angles of each kind, got {len(tx)} and {len(tz)}")
        if not 0.0 <= self.s_target <= 1.0:
            raise ValueError(f"s_target must lie in [0, 1], got {self.s_target}")
        object.__setattr__(self, "thetas_x", tx)
        object.__setattr__(self, "thetas_z", tz)
        object.__setattr__(self, "s_target", float(self.s_target))

    @property
    def depth(self) -> int:
        return len(self.thetas_x)

    @property
    def vector(self) -> np.ndarray:
        """Flat angle vector ``(tx_1..tx_P, tz_1..tz_P)``."""
        return np.r_[self.thetas_x, self.thetas_z]

    @classmethod
    def from_vector(cls, theta: Sequence[float], s_target: float = 1.0) -> "QaoaParams":
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.size % 2:
            raise ValueError("angle vector must have even length 2P")
        p = theta.size // 2
        return cls(tuple(theta[:p]), tuple(theta[p:]), s_target)

    @classmethod
    def zeros(cls, depth: int, s_target: float = 1.0) -> "QaoaParams":
        return cls((0.0,) * depth, (0.0,) * depth, s_target)


def dynamics_sector(config: CouplingConfig) -> FermionParity:
    """Parity of ``|+>^N`` in the fermion picture.

    For h > 0 the initial state is the empty vacuum; for h < 0 it is completely
    filled, which is odd when N is odd.
    """
    if config.field_h < 0 and config.n_sites % 2:
        return FermionParity.ODD
    return FermionParity.EVEN


def initial_unitary(config: CouplingConfig) -> np.ndarray:
    n = config.n_sites
    if config.field_h > 0:
        return np.eye(2 * n, dtype=complex)
    if config.field_h < 0:
        z = np.zeros((n, n))
        i = np.eye(n)
        return np.block([[z, i], [i, z]]).astype(complex)
    raise ValueError("h = 0 leaves the initial state undefined")


def _givens_pairs(generator: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a real antisymmetric generator with disjoint support into rotation pairs."""
    scale = max(float(np.max(np.abs(generator))), 1e-300)
    rows, cols = np.nonzero(np.triu(np.abs(generator) > 1e-14 * scale, 1))
    used = np.r_[rows, cols]
    if used.size != np.unique(used).size:
        raise ValueError("generator pairs overlap; not a product of commuting rotations")
    return rows.astype(np.int64), cols.astype(np.int64), generator[rows, cols].copy()


@dataclass(frozen=True, eq=False)
class EvolutionCache:
    """Everything theta-independent: generators, their eigendecompositions, U_0."""

    config: CouplingConfig
    sector: FermionParity
    hx: NambuMatrix
    hz: NambuMatrix
    eig_x: tuple[np.ndarray, np.ndarray]
    eig_z: tuple[np.ndarray, np.ndarray]
    u0: NambuMatrix
    _targets: dict = field(default_factory=dict, repr=False)
    _pairs: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, config: CouplingConfig, sector: FermionParity | None = None) -> "EvolutionCache":
        sector = dynamics_sector(config) if sector is None else FermionParity.parse(sector)
        hx = build_hx(config)
        hz = build_hz(config, sector)
        eig_x = np.linalg.eigh(hx.entries)
        eig_z = np.linalg.eigh(hz.entries)
        for (w, v), m in ((eig_x, hx), (eig_z, hz)):
            if np.max(np.abs((v * w) @ v.conj().T - m.entries)) > 1e-12:
                raise ArithmeticError("eigendecomposition does not reconstruct its source")
            w.setflags(write=False)
            v.setflags(write=False)
        return cls(config, sector, hx, hz, eig_x, eig_z, unitary(initial_unitary(config)))

    @property
    def n_modes(self) -> int:
        return self.config.n_sites

    def target(self, s_target: float) -> np.ndarray:
        key = float(s_target)
        if key not in self._targets:
            self._targets[key] = build_h(self.config, key, self.sector).entries
        return self._targets[key]

    def ground_energy(self, s_target: float) -> float:
        from .nambu import diagonalize

        return diagonalize(build_h(self.config, s_target, self.sector), self.sector).ground_energy

    def kernel_args(self, s_target: float) -> tuple:
        """Arguments for the compiled Majorana energy/gradient after ``theta``."""
        key = float(s_target)
        if key not in self._pairs:
            n = self.n_modes
            w = omega(n)
            gx = -2j * (w @ self.hx.entries @ w.conj().T)
            gz = -2j * (w @ self.hz.entries @ w.conj().T)
            assert np.max(np.abs(gx.imag)) < 1e-12 and np.max(np.abs(gz.imag)) < 1e-12
            m = w @ self.target(key) @ w.conj().T
            phi = w @ self.u0.entries[:, n:]
            self._pairs[key] = (
                np.ascontiguousarray(phi.real),
                np.ascontiguousarray(phi.imag),
                np.ascontiguousarray(m.real),
                np.ascontiguousarray(m.imag),
                *_givens_pairs(gx.real),
                *_givens_pairs(gz.real),
            )
        return self._pairs[key]


def _check_dims(params: QaoaParams, cache: EvolutionCache) -> None:
    if not isinstance(cache, EvolutionCache):
        raise TypeError("cache must be an EvolutionCache")
    if cache.u0.dim != 2 * cache.n_modes:
        raise ValueError("cache dimensions are inconsistent")


def _expm_factor(eig: tuple[np.ndarray, np.ndarray], theta: float) -> np.ndarray:
    w, v = eig
    return (v * np.exp(-2j * theta * w)) @ v.conj().T


def _layer_factors(params: QaoaParams, cache: EvolutionCache):
    """Factors in application order: z_1, x_1, z_2, x_2, ..."""
    for tx, tz in zip(params.thetas_x, params.thetas_z):
        yield "z", tz
        yield "x", tx


def evolve(params: QaoaParams, cache: EvolutionCache) -> NambuMatrix:
    _check_dims(params, cache)
    u = cache.u0.entries.copy()
    for kind, theta in _layer_factors(params, cache):
        u = _expm_factor(cache.eig_x if kind == "x" else cache.eig_z, theta) @ u
    return unitary(u)


def _apply(eig: tuple[np.ndarray, np.ndarray], theta: float, x: np.ndarray) -> np.ndarray:
    w, v = eig
    return v @ (np.exp(-2j * theta * w)[:, None] * (v.conj().T @ x))


def _trace_energy(phi: np.ndarray, h: np.ndarray) -> float:
    e = np.trace(phi.conj().T @ h @ phi)
    if abs(e.imag) > IMAG_TOL:
        raise ArithmeticError(f"energy has imaginary part {e.imag:.2e}")
    return float(e.real)


def energy_of_unitary(u: np.ndarray, h: np.ndarray) -> float:
    """``Tr(U^dag H U Gamma)``."""
    n = u.shape[0] // 2
    return _trace_energy(np.asarray(u)[:, n:], h)


def qaoa_energy(params: QaoaParams, cache: EvolutionCache) -> float:
    _check_dims(params, cache)
    n = cache.n_modes
    phi = cache.u0.entries[:, n:].copy()
    for kind, theta in _layer_factors(params, cache):
        phi = _apply(cache.eig_x if kind == "x" else cache.eig_z, theta, phi)
    e = _trace_energy(phi, cache.target(params.s_target))
    if not np.isfinite(e):
        raise FloatingPointError("non-finite energy")
    return e


def qaoa_gradient(params: QaoaParams, cache: EvolutionCache) -> np.ndarray:
    """Analytic gradient ``(dE/dtx_1..dE/dtx_P, dE/dtz_1..dE/dtz_P)``.

    One forward sweep to the final state, then a backward sweep that peels off one
    factor at a time from both the state and the adjoint ``Lambda = H Phi``; each
    factor contributes ``2 Re Tr(Lambda^dag (-2i A) Phi)``.
    """
    _check_dims(params, cache)
    n = cache.n_modes
    p = params.depth
    phi = cache.u0.entries[:, n:].copy()
    factors = list(_layer_factors(params, cache))
    for kind, theta in factors:
        phi = _apply(cache.eig_x if kind == "x" else cache.eig_z, theta, phi)
    lam = cache.target(params.s_target) @ phi
    grad = np.zeros(2 * p)
    gens = {"x": cache.hx.entries, "z": cache.hz.entries}
    for idx in range(len(factors) - 1, -1, -1):
        kind, theta = factors[idx]
        layer = idx // 2
        d = 2.0 * np.real(np.sum(lam.conj() * (-2j * (gens[kind] @ phi))))
        grad[layer if kind == "x" else p + layer] = d
        eig = cache.eig_x if kind == "x" else cache.eig_z
        phi = _apply(eig, -theta, phi)
        lam = _apply(eig, -theta, lam)
    return grad


def fast_energy_grad(theta: np.ndarray, cache: EvolutionCache, s_target: float) -> tuple[float, np.ndarray]:
    """Compiled Majorana-basis energy and gradient for a flat angle vector."""
    return _kernels.energy_grad(np.ascontiguousarray(theta, dtype=float), *cache.kernel_args(s_target))


def fast_energy(theta: np.ndarray, cache: EvolutionCache, s_target: float) -> float:
    return float(_kernels.energy(np.ascontiguousarray(theta, dtype=float), *cache.kernel_args(s_target)))


@dataclass(frozen=True, eq=False)
class ThoulessZ:
    z: np.ndarray

    def __post_init__(self) -> None:
        z = np.array(self.z, dtype=complex)
        dev = np.max(np.abs(z + z.T)) if z.size else 0.0
        if dev > STRUCTURE_TOL * max(1.0, float(np.max(np.abs(z))) if z.size else 1.0):
            raise ValueError(f"Thouless matrix is not antisymmetric (deviation {dev:.2e})")
        z.setflags(write=False)
        object.__setattr__(self, "z", z)


def thouless_z(u: NambuMatrix | np.ndarray, cond_limit: float = 1e12) -> ThoulessZ:
    """``Z = V^* (U^*)^{-1}`` for ``u = [[U, V^*], [V, U^*]]``."""
    m = np.asarray(u)
    n = m.shape[0] // 2
    ub = m[:n, :n]
    vb = m[n:, :n]
    if np.linalg.cond(ub) > cond_limit:
        raise ThoulessSingularError("U block is singular; the state leaves the Thouless chart")
    z = vb.conj() @ np.linalg.inv(ub.conj())
    return ThoulessZ(z)


def verify_ph_structure(u: NambuMatrix | np.ndarray, tol: float = STRUCTURE_TOL) -> bool:
    m = np.asarray(u)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        return False
    n = m.shape[0] // 2
    ub, vs = m[:n, :n], m[:n, n:]
    vb, us = m[n:, :n], m[n:, n:]
    if np.max(np.abs(us - ub.conj())) > tol or np.max(np.abs(vs - vb.conj())) > tol:
        return False
    eye = np.eye(n)
    c1 = ub.conj().T @ ub + vb.conj().T @ vb - eye
    c2 = ub.T @ vb + vb.T @ ub
    return bool(max(np.max(np.abs(c1)), np.max(np.abs(c2))) <= tol)


def verify_reflection(u: NambuMatrix | np.ndarray, sign_of_h: float, tol: float = STRUCTURE_TOL) -> bool:
    """Commutation (h > 0) or anticommutation (h < 0) with ``diag(P, -P)``."""
    m = np.asarray(u)
    p = reflection_operator(m.shape[0] // 2)
    if sign_of_h > 0:
        r = m @ p - p @ m
    elif sign_of_h < 0:
        r = m @ p + p @ m
    else:
        raise ValueError("sign_of_h must be nonzero")
    return bool(np.linalg.norm(r, 2) <= tol)


def _uniform(chain: CouplingConfig | int) -> CouplingConfig:
    if isinstance(chain, CouplingConfig):
        config = chain
    else:
        n = int(chain)
        config = CouplingConfig(n, (1.0,) * n)
    j = config.j
    if config.n_sites % 2:
        raise ValueError("momentum representation needs an even number of sites")
    if np.max(np.abs(j - j[0])) > 0.0:
        raise ValueError("momentum representation needs uniform couplings")
    return config


def momenta(n: int) -> np.ndarray:
    """Positive even-sector wavevectors ``(2m-1) pi / N``, m = 1..N/2."""
    return (2 * np.arange(1, n // 2 + 1) - 1) * np.pi / n


def momentum_generators(chain: CouplingConfig | int) -> tuple[np.ndarray, np.ndarray]:
    """Per-k 2x2 blocks of ``H_x`` and ``H_z``; shape ``(N/2, 2, 2)`` each."""
    config = _uniform(chain)
    k = momenta(config.n_sites)
    jv = config.j[0]
    h = config.field_h
    ax = np.zeros((k.size, 2, 2), dtype=complex)
    ax[:, 0, 0] = h
    ax[:, 1, 1] = -h
    az = np.zeros((k.size, 2, 2), dtype=complex)
    az[:, 0, 0] = -jv * np.cos(k)
    az[:, 1, 1] = jv * np.cos(k)
    az[:, 0, 1] = jv * np.sin(k)
    az[:, 1, 0] = jv * np.sin(k)
    return ax, az


def _expm2(a: np.ndarray, theta: float) -> np.ndarray:
    """``exp(-2i theta a)`` for a batch of traceless real-symmetric 2x2 blocks."""
    r = np.sqrt(a[:, 0, 0].real ** 2 + np.abs(a[:, 0, 1]) ** 2)
    c = np.cos(2 * theta * r)
    with np.errstate(invalid="ignore", divide="ignore"):
        sc = np.where(r > 0, np.sin(2 * theta * r) / np.where(r > 0, r, 1.0), 2 * theta)
    return c[:, None, None] * np.eye(2) - 1j * sc[:, None, None] * a


def momentum_evolve(params: QaoaParams, chain: CouplingConfig | int) -> np.ndarray:
    """The N/2 evolved 2x2 blocks ``u_k``; array of shape ``(N/2, 2, 2)``."""
    config = _uniform(chain)
    ax, az = momentum_generators(config)
    u = np.broadcast_to(np.eye(2, dtype=complex), ax.shape).copy()
    if config.field_h < 0:
        u = np.broadcast_to(np.array([[0, 1], [1, 0]], dtype=complex), ax.shape).copy()
    for tx, tz in zip(params.thetas_x, params.thetas_z):
        u = _expm2(az, tz) @ u
        u = _expm2(ax, tx) @ u
    return u


def momentum_energy(params: QaoaParams, chain: CouplingConfig | int) -> float:
    config = _uniform(chain)
    ax, az = momentum_generators(config)
    u = momentum_evolve(params, config)
    a = params.s_target * az + (1.0 - params.s_target) * ax
    m = np.conj(np.transpose(u, (0, 2, 1))) @ a @ u
    return float(np.sum(m[:, 1, 1].real - m[:, 0, 0].real))


def ph_constraint_blocks(u: NambuMatrix | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``K = U^dag U + V^dag V`` and ``Q = U^dag V^* + V^dag U^*`` from the first block column.

    Unitarity of a particle-hole evolution is exactly ``K = 1`` and ``Q = 0``.
    """
    m = np.asarray(u)
    n = m.shape[0] // 2
    ub, vb = m[:n, :n], m[n:, :n]
    k = ub.conj().T @ ub + vb.conj().T @ vb
    q = ub.conj().T @ vb.conj() + vb.conj().T @ ub.conj()
    return k, q


def random_gauge(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random block-diagonal ``diag(W, W^*)`` with Haar-random unitary ``W``."""
    w = unitary_group.rvs(n, random_state=rng) if n > 1 else np.exp(2j * np.pi * rng.random()) * np.eye(1)
    z = np.zeros((n, n))
    return np.block([[w, z], [z, w.conj()]])


__all__ = [
    "EvolutionCache",
    "MatrixKind",
    "QaoaParams",
    "ThoulessSingularError",
    "ThoulessZ",
    "dynamics_sector",
    "energy_of_unitary",
    "evolve",
    "fast_energy",
    "fast_energy_grad",
    "initial_unitary",
    "momentum_energy",
    "momentum_evolve",
    "momentum_generators",
    "ph_constraint_blocks",
    "qaoa_energy",
    "qaoa_gradient",
    "random_gauge",
    "thouless_z",
    "verify_ph_structure",
    "verify_reflection",
]

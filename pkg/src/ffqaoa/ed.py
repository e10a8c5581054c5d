"""Dense spin-basis reference implementation (exact diagonalization).

Basis states are integers whose bit ``N-1-j`` is the z-spin of site ``j``
(bit 0 -> spin up, sigma^z = +1), matching ``np.kron`` ordering.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import linalg

from .evolution import QaoaParams
from .nambu import CouplingConfig, FermionParity

MAX_DENSE_SITES = 10
MAX_GAP_SITES = 12


class OracleSizeError(ValueError):
    pass


def _check(n: int, limit: int) -> None:
    if n > limit:
        raise OracleSizeError(f"dense oracle limited to N <= {limit}, got {n}")


@lru_cache(maxsize=16)
def _z_signs(n: int) -> np.ndarray:
    """Row k: sigma^z eigenvalue of site k for every basis state."""
    states = np.arange(2**n)
    bits = (states[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    return 1.0 - 2.0 * bits


def _zz_diagonal(config: CouplingConfig) -> np.ndarray:
    n = config.n_sites
    z = _z_signs(n)
    return -sum(config.couplings[j] * z[j] * z[(j + 1) % n] for j in range(n))


def _x_matrix(n: int, h: float) -> np.ndarray:
    dim = 2**n
    states = np.arange(dim)
    m = np.zeros((dim, dim))
    for k in range(n):
        m[states ^ (1 << (n - 1 - k)), states] += -h
    return m


def dense_hamiltonian(config: CouplingConfig, s: float) -> np.ndarray:
    """``H(s) = s H_z + (1-s) H_x`` on the full 2^N space."""
    _check(config.n_sites, MAX_GAP_SITES)
    h = s * np.diag(_zz_diagonal(config)) + (1.0 - s) * _x_matrix(config.n_sites, config.field_h)
    h = h.astype(complex)
    assert np.allclose(h, h.conj().T, atol=1e-14, rtol=0)
    return h


def dense_parity_operator(n: int) -> np.ndarray:
    """Fermion parity ``prod_j sigma^x_j`` (the Jordan-Wigner image of (-1)^{N_F})."""
    _check(n, MAX_GAP_SITES)
    dim = 2**n
    p = np.zeros((dim, dim))
    p[np.arange(dim) ^ (dim - 1), np.arange(dim)] = 1.0
    return p


def sector_hamiltonian(config: CouplingConfig, s: float, sector: FermionParity) -> np.ndarray:
    """``H(s)`` restricted to one parity sector, written in the sigma^x product basis.

    In that basis ``H_x`` is diagonal and each ``sigma^z sigma^z`` bond flips two x-spins,
    so the sector with an even (odd) number of flipped spins is closed.
    """
    n = config.n_sites
    _check(n, MAX_GAP_SITES)
    states = np.arange(2**n)
    flips = np.array([bin(x).count("1") for x in states])
    keep = states[(flips % 2) == int(FermionParity.parse(sector))]
    index = {int(x): i for i, x in enumerate(keep)}
    dim = keep.size
    m = np.zeros((dim, dim))
    hx_diag = -config.field_h * (n - 2.0 * flips[keep])
    m[np.arange(dim), np.arange(dim)] = (1.0 - s) * hx_diag
    for j in range(n):
        mask = (1 << (n - 1 - j)) | (1 << (n - 1 - (j + 1) % n))
        rows = np.array([index[int(x ^ mask)] for x in keep])
        m[rows, np.arange(dim)] += -s * config.couplings[j]
    return m


def sector_levels(config: CouplingConfig, s: float, sector: FermionParity, count: int = 2) -> np.ndarray:
    w = np.linalg.eigvalsh(sector_hamiltonian(config, s, sector))
    return w[:count]


def dense_gap(config: CouplingConfig, s: float, sector: FermionParity | None = None) -> float:
    """``E_1 - E_0``; both parity sectors unless ``sector`` is given."""
    n = config.n_sites
    _check(n, MAX_GAP_SITES)
    if sector is not None:
        w = sector_levels(config, s, sector)
        return float(w[1] - w[0])
    if n <= MAX_DENSE_SITES:
        w = np.linalg.eigvalsh(dense_hamiltonian(config, s))
    else:
        w = np.sort(np.r_[sector_levels(config, s, FermionParity.EVEN), sector_levels(config, s, FermionParity.ODD)])
    return float(w[1] - w[0])


def initial_state(config: CouplingConfig) -> np.ndarray:
    """Ground state of ``H_x``: ``|+>^N`` for h > 0, ``|->^N`` for h < 0."""
    n = config.n_sites
    psi = np.full(2**n, 2.0 ** (-n / 2), dtype=complex)
    if config.field_h < 0:
        ones = np.array([bin(x).count("1") for x in range(2**n)])
        psi *= (-1.0) ** ones
    elif config.field_h == 0:
        raise ValueError("h = 0 leaves the initial state undefined")
    return psi


def dense_qaoa_state(config: CouplingConfig, params: QaoaParams) -> np.ndarray:
    """``prod_p e^{-i tx_p H_x} e^{-i tz_p H_z} |psi_0>`` (single angles, no factor 2)."""
    n = config.n_sites
    _check(n, MAX_DENSE_SITES)
    zz = _zz_diagonal(config)
    hx = _x_matrix(n, config.field_h)
    w, v = np.linalg.eigh(hx)
    psi = initial_state(config)
    for tx, tz in zip(params.thetas_x, params.thetas_z):
        psi = np.exp(-1j * tz * zz) * psi
        psi = v @ (np.exp(-1j * tx * w) * (v.T @ psi))
    norm = np.linalg.norm(psi)
    assert abs(norm - 1.0) < 1e-12, norm
    return psi


def dense_energy(config: CouplingConfig, params: QaoaParams) -> float:
    psi = dense_qaoa_state(config, params)
    h = dense_hamiltonian(config, params.s_target)
    return float(np.real(np.vdot(psi, h @ psi)))


def dense_expm(h: np.ndarray, t: complex) -> np.ndarray:
    """``exp(t h)`` by scaling and squaring, independent of any eigendecomposition."""
    return linalg.expm(t * np.asarray(h, dtype=complex))

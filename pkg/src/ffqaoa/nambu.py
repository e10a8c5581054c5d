"""Nambu (BdG) matrices for the transverse-field Ising ring and their diagonalization.

Conventions
-----------
The Nambu vector is ``Psi = (c_1..c_N, c_1^dag..c_N^dag)``.  Majorana operators
``a_j = c_j + c_j^dag`` and ``b_j = -i (c_j - c_j^dag)`` are collected as
``m = (a_1..a_N, b_1..b_N) = sqrt(2) * omega(N) @ Psi`` where ``omega`` is unitary.
A Nambu Hermitian ``H`` maps to the real antisymmetric ``K = -i omega H omega^dag``
and a Nambu unitary ``U`` to the real orthogonal ``O = omega U omega^dag``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-10
ZERO_MODE_TOL = 1e-12
PAIRING_TOL = 1e-10


class NambuError(ValueError):
    """Malformed Nambu input (wrong shape, broken symmetry, bad pairing)."""


class FermionParity(enum.IntEnum):
    EVEN = 0
    ODD = 1

    @property
    def sign(self) -> int:
        return 1 if self is FermionParity.EVEN else -1

    @classmethod
    def parse(cls, value: "FermionParity | int | str") -> "FermionParity":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            return cls[value.strip().upper()]
        return cls(int(value))


class MatrixKind(enum.Enum):
    HERMITIAN = "hermitian"
    UNITARY = "unitary"


@dataclass(frozen=True)
class CouplingConfig:
    """A periodic Ising ring: ``H_z = -sum_j J_j s^z_j s^z_{j+1}``, ``H_x = -h sum_j s^x_j``."""

    n_sites: int
    couplings: tuple[float, ...]
    field_h: float = 1.0
    label: str = ""

    def __post_init__(self) -> None:
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        j = tuple(float(x) for x in np.asarray(self.couplings, dtype=float).ravel())
        if len(j) != self.n_sites:
            raise ValueError(f"expected {self.n_sites} couplings, got {len(j)}")
        if not all(np.isfinite(j)) or not np.isfinite(self.field_h):
            raise ValueError("couplings and field must be finite")
        object.__setattr__(self, "couplings", j)
        object.__setattr__(self, "field_h", float(self.field_h))

    @classmethod
    def from_couplings(cls, couplings: Sequence[float], field_h: float = 1.0, label: str = "") -> "CouplingConfig":
        j = tuple(float(x) for x in couplings)
        return cls(len(j), j, field_h, label)

    @property
    def j(self) -> np.ndarray:
        return np.asarray(self.couplings, dtype=float)

    def with_field(self, field_h: float) -> "CouplingConfig":
        return CouplingConfig(self.n_sites, self.couplings, field_h, self.label)


@dataclass(frozen=True, eq=False)
class NambuMatrix:
    """Dense 2N x 2N complex matrix tagged as a Hermitian generator or an evolution unitary."""

    entries: np.ndarray
    kind: MatrixKind

    def __post_init__(self) -> None:
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
            raise NambuError(f"expected an even square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise NambuError("non-finite entries")
        if self.kind is MatrixKind.HERMITIAN:
            dev = np.max(np.abs(a - a.conj().T))
            if dev > HERMITIAN_TOL:
                raise NambuError(f"not Hermitian (deviation {dev:.2e})")
        else:
            dev = np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0])))
            if dev > UNITARY_TOL:
                raise NambuError(f"not unitary (deviation {dev:.2e})")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0] // 2

    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Top-left, top-right, bottom-left, bottom-right N x N blocks."""
        n = self.n_modes
        a = self.entries
        return a[:n, :n], a[:n, n:], a[n:, :n], a[n:, n:]

    def has_ph_structure(self, tol: float = PAIRING_TOL) -> bool:
        """Particle-hole pattern: ``tau_x M^* tau_x`` equals ``-M`` (generators) or ``M`` (unitaries)."""
        c = ph_conjugate(self.entries)
        target = -self.entries if self.kind is MatrixKind.HERMITIAN else self.entries
        return bool(np.max(np.abs(c - target)) <= tol)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.entries, dtype=dtype)


def ph_conjugate(m: np.ndarray) -> np.ndarray:
    """``tau_x m^* tau_x``: swaps the particle and hole blocks and conjugates."""
    n = m.shape[0] // 2
    return np.roll(np.roll(m.conj(), n, axis=0), n, axis=1)


def hermitian(m: np.ndarray) -> NambuMatrix:
    return NambuMatrix(m, MatrixKind.HERMITIAN)


def unitary(m: np.ndarray) -> NambuMatrix:
    return NambuMatrix(m, MatrixKind.UNITARY)


def gamma(n: int) -> np.ndarray:
    """The projector ``diag(0_N, 1_N)`` selecting the occupied Nambu columns."""
    return np.diag(np.r_[np.zeros(n), np.ones(n)]).astype(complex)


def omega(n: int) -> np.ndarray:
    """Unitary Nambu -> Majorana change of basis (up to the sqrt(2) normalization)."""
    i = np.eye(n)
    return np.block([[i, i], [-1j * i, 1j * i]]) / np.sqrt(2.0)


def to_majorana(m: np.ndarray) -> np.ndarray:
    """``omega m omega^dag``: real antisymmetric times i for generators, real orthogonal for unitaries."""
    w = omega(m.shape[0] // 2)
    return w @ m @ w.conj().T


def from_majorana(o: np.ndarray) -> np.ndarray:
    w = omega(o.shape[0] // 2)
    return w.conj().T @ o @ w


def reflection_operator(n: int) -> np.ndarray:
    """``diag(P, -P)`` with ``P`` the anti-diagonal site reflection."""
    p = np.fliplr(np.eye(n))
    return linalg.block_diag(p, -p).astype(complex)


def build_hx(config: CouplingConfig) -> NambuMatrix:
    n = config.n_sites
    h = config.field_h
    return hermitian(np.diag(np.r_[np.full(n, h), np.full(n, -h)]))


def z_blocks(config: CouplingConfig, parity: FermionParity) -> tuple[np.ndarray, np.ndarray]:
    """The real blocks ``A_z`` (symmetric) and ``B_z`` (antisymmetric)."""
    n = config.n_sites
    jj = config.j
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    for k in range(n - 1):
        a[k, k + 1] += -jj[k] / 2
        a[k + 1, k] += -jj[k] / 2
        b[k, k + 1] += -jj[k] / 2
        b[k + 1, k] += jj[k] / 2
    edge = FermionParity.parse(parity).sign * jj[n - 1] / 2
    a[n - 1, 0] += edge
    a[0, n - 1] += edge
    b[n - 1, 0] += edge
    b[0, n - 1] -= edge
    return a, b


def build_hz(config: CouplingConfig, parity: FermionParity = FermionParity.EVEN) -> NambuMatrix:
    a, b = z_blocks(config, parity)
    return hermitian(np.block([[a, b], [-b, -a]]))


def build_h(config: CouplingConfig, s: float, parity: FermionParity = FermionParity.EVEN) -> NambuMatrix:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    m = s * build_hz(config, parity).entries + (1.0 - s) * build_hx(config).entries
    return hermitian(m)


@dataclass(frozen=True, eq=False)
class BdgSpectrum:
    epsilons: np.ndarray
    transform: NambuMatrix
    vacuum_energy: float
    vacuum_parity: FermionParity
    sector: FermionParity
    majorana_transform: np.ndarray = field(repr=False)

    @property
    def ground_energy(self) -> float:
        """Lowest physical many-body energy inside ``sector``."""
        return self.lowest_levels()[0]

    def lowest_levels(self) -> tuple[float, float]:
        """The two lowest energies in ``sector``.

        Quasiparticle sets must have an even size when the vacuum parity matches the
        sector and an odd size otherwise.
        """
        e = self.epsilons
        ev = self.vacuum_energy
        if self.vacuum_parity == self.sector:
            return ev, ev + 2.0 * (e[0] + e[1])
        return ev + 2.0 * e[0], ev + 2.0 * e[1]


def diagonalize(m: NambuMatrix, sector: FermionParity = FermionParity.EVEN) -> BdgSpectrum:
    """Bogoliubov diagonalization through the real Schur form of the Majorana generator."""
    if m.kind is not MatrixKind.HERMITIAN:
        raise NambuError("diagonalize needs a Hermitian generator")
    if not m.has_ph_structure():
        raise NambuError("input lacks particle-hole structure")
    n = m.n_modes
    mj = to_majorana(m.entries)
    k = (-1j * mj).real
    if np.max(np.abs((-1j * mj).imag)) > PAIRING_TOL or np.max(np.abs(k + k.T)) > PAIRING_TOL:
        raise NambuError("Majorana generator is not real antisymmetric")
    try:
        t, z = linalg.schur(k, output="real")
    except (linalg.LinAlgError, ValueError) as exc:
        raise NambuError(f"Schur decomposition failed: {exc}") from exc

    pairs: list[tuple[int, int, float]] = []
    singles: list[int] = []
    i = 0
    while i < 2 * n:
        # standardized real Schur form: nonzero subdiagonal only inside 2x2 blocks
        if i + 1 < 2 * n and t[i + 1, i] != 0.0:
            pairs.append((i, i + 1, 0.5 * (t[i, i + 1] - t[i + 1, i])))
            i += 2
        else:
            singles.append(i)
            i += 1
    # zero modes come out as 1x1 blocks; any two of them form a valid pair
    for q in range(0, len(singles), 2):
        pairs.append((singles[q], singles[q + 1], 0.0))

    o = np.zeros((2 * n, 2 * n))
    eps = np.zeros(n)
    for q, (c1, c2, bval) in enumerate(pairs):
        z1, z2 = z[:, c1], z[:, c2]
        if bval < 0:
            z1, z2, bval = z2, z1, -bval
        o[:, q] = z1
        o[:, n + q] = z2
        eps[q] = bval
    order = np.argsort(eps, kind="stable")
    eps = eps[order]
    o = o[:, np.r_[order, n + order]]
    eps[eps < ZERO_MODE_TOL] = 0.0

    ev = np.linalg.eigvalsh(m.entries)
    if np.max(np.abs(np.sort(np.r_[eps, -eps]) - ev)) > PAIRING_TOL * max(1.0, float(np.max(np.abs(ev)))) * 100:
        raise NambuError("quasiparticle energies do not reproduce the spectrum")

    det = np.linalg.det(o)
    vacuum = FermionParity.EVEN if det > 0 else FermionParity.ODD
    u = unitary(from_majorana(o.astype(complex)))
    return BdgSpectrum(
        epsilons=eps,
        transform=u,
        vacuum_energy=float(-eps.sum()),
        vacuum_parity=vacuum,
        sector=FermionParity.parse(sector),
        majorana_transform=o,
    )


def sector_spectrum(config: CouplingConfig, s: float, sector: FermionParity) -> BdgSpectrum:
    return diagonalize(build_h(config, s, sector), sector)

"""Dimension counting for the reachable Gaussian manifold and the predicted critical depth."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .evolution import EvolutionCache, QaoaParams, evolve
from .models import is_reflection_symmetric, is_translation_invariant, uniform_chain
from .nambu import CouplingConfig

RANK_RTOL = 1e-8


class SymmetryClass(enum.Enum):
    GENERAL = "general"
    REFLECTION_SYMMETRIC = "reflection-symmetric"
    TRANSLATION_INVARIANT = "translation-invariant"


class RankDeficiencyError(ArithmeticError):
    def __init__(self, expected: int, ranks: list[int]):
        super().__init__(f"Jacobian rank {ranks} differs from the predicted dimension {expected}")
        self.expected = expected
        self.ranks = ranks


@dataclass(frozen=True)
class DimensionReport:
    n_sites: int
    symmetry: SymmetryClass
    dim_u: int
    dim_w: int
    dim_f: int
    p_critical: int

    @property
    def parity_of_n(self) -> str:
        return "even" if self.n_sites % 2 == 0 else "odd"

    def as_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "symmetry": self.symmetry.value,
            "dim_u": self.dim_u,
            "dim_w": self.dim_w,
            "dim_f": self.dim_f,
            "p_critical": self.p_critical,
            "parity_of_n": self.parity_of_n,
        }


def classify(config: CouplingConfig) -> SymmetryClass:
    """Most restrictive class the couplings satisfy."""
    if config.n_sites % 2 == 0 and is_translation_invariant(config):
        return SymmetryClass.TRANSLATION_INVARIANT
    if is_reflection_symmetric(config):
        return SymmetryClass.REFLECTION_SYMMETRIC
    return SymmetryClass.GENERAL


def predict_pcr(n: int, symmetry: SymmetryClass | str) -> DimensionReport:
    symmetry = SymmetryClass(symmetry)
    if int(n) != n or n < 2:
        raise ValueError(f"N must be an integer >= 2, got {n}")
    n = int(n)
    if symmetry is SymmetryClass.GENERAL:
        du, dw = 2 * n * n - n, n * n
    elif symmetry is SymmetryClass.REFLECTION_SYMMETRIC:
        du = n * n
        dw = (n * n + 1) // 2 if n % 2 else n * n // 2
    else:
        if n % 2:
            raise ValueError("the translation-invariant count needs even N")
        du, dw = 2 * n, n
    df = du - dw
    if df % 2:
        raise ArithmeticError(f"odd manifold dimension {df}")
    report = DimensionReport(n, symmetry, du, dw, df, df // 2)
    if symmetry is SymmetryClass.GENERAL:
        assert df == n * (n - 1) and report.p_critical == n * (n - 1) // 2
    elif symmetry is SymmetryClass.REFLECTION_SYMMETRIC:
        assert report.p_critical == ((n * n - 1) // 4 if n % 2 else n * n // 4)
    else:
        assert report.p_critical == n // 2
    return report


def _certificate_config(n: int, symmetry: SymmetryClass, rng: np.random.Generator) -> CouplingConfig:
    if symmetry is SymmetryClass.TRANSLATION_INVARIANT:
        return uniform_chain(n)
    j = rng.uniform(0.5, 1.5, n)
    if symmetry is SymmetryClass.REFLECTION_SYMMETRIC:
        head = j[: n - 1]
        j[: n - 1] = (head + head[::-1]) / 2
    return CouplingConfig(n, tuple(j), 1.0, f"certificate-{symmetry.value}")


def thouless_jacobian(params: QaoaParams, cache: EvolutionCache) -> np.ndarray:
    """Real Jacobian of the upper triangle of ``Z`` (Re and Im rows) w.r.t. the angle vector.

    Uses ``dU/dtheta_k = M_k (-2i A_k) M_k^dag U`` where ``M_k`` is the product of the
    factors applied after factor k.
    """
    n = cache.n_modes
    p = params.depth
    u = np.asarray(evolve(params, cache))
    ub, vb = u[:n, :n], u[n:, :n]
    uinv = np.linalg.inv(ub.conj())
    z = vb.conj() @ uinv
    iu = np.triu_indices(n, 1)
    factors = []
    for tx, tz in zip(params.thetas_x, params.thetas_z):
        factors.append(("z", tz))
        factors.append(("x", tx))
    gens = {"x": cache.hx.entries, "z": cache.hz.entries}
    eigs = {"x": cache.eig_x, "z": cache.eig_z}
    jac = np.zeros((2 * iu[0].size, 2 * p))
    after = np.eye(2 * n, dtype=complex)
    for k in range(len(factors) - 1, -1, -1):
        kind, theta = factors[k]
        du = after @ (-2j * gens[kind]) @ after.conj().T @ u
        dub, dvb = du[:n, :n], du[n:, :n]
        dz = dvb.conj() @ uinv - z @ dub.conj() @ uinv
        col = k // 2 if kind == "x" else p + k // 2
        jac[:, col] = np.r_[dz[iu].real, dz[iu].imag]
        w, v = eigs[kind]
        after = after @ ((v * np.exp(-2j * theta * w)) @ v.conj().T)
    return jac


def jacobian_rank(jac: np.ndarray, rtol: float = RANK_RTOL) -> int:
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def certify_gaussian_dimension(n: int, symmetry: SymmetryClass | str, samples: int = 3, seed: int = 0) -> int:
    """Numerical rank of ``theta -> Z(theta)`` at deep random circuits.

    The circuit depth is twice the predicted manifold dimension.  Up to ``samples``
    independent draws are tried; a rank that never reaches the prediction raises.
    """
    symmetry = SymmetryClass(symmetry)
    if n > 8:
        raise ValueError("rank certificate limited to N <= 8")
    report = predict_pcr(n, symmetry)
    rng = np.random.default_rng(seed)
    config = _certificate_config(n, symmetry, rng)
    cache = EvolutionCache.build(config)
    depth = 2 * report.dim_f
    ranks = []
    for _ in range(max(1, samples)):
        params = QaoaParams.from_vector(rng.uniform(0.0, 2 * np.pi, 2 * depth), 1.0)
        try:
            r = jacobian_rank(thouless_jacobian(params, cache))
        except np.linalg.LinAlgError:
            continue
        ranks.append(r)
        if r == report.dim_f:
            return r
    raise RankDeficiencyError(report.dim_f, ranks)

"""Coupling families: frustrated rings (symmetric or not), disordered rings, uniform chains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nambu import CouplingConfig

SYMMETRY_TOL = 1e-14
DISORDER_INTERVAL = (0.8, 1.0)
# second SeedSequence word for disorder draws; restarts use their own counter space
DISORDER_STREAM = 0xD150


@dataclass(frozen=True)
class DisorderSpec:
    seed: int
    symmetric: bool = False
    interval: tuple[float, float] = DISORDER_INTERVAL

    def __post_init__(self) -> None:
        lo, hi = self.interval
        if not lo <= hi:
            raise ValueError("disorder interval must satisfy lo <= hi")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class RingSpec:
    n_sites: int
    jw: float = 0.5
    jw_prime: float = 0.55
    jf: float = 0.45
    j: float = 1.0
    field_h: float = 1.0
    disorder: DisorderSpec | None = None

    @property
    def n_rand(self) -> int:
        return (self.n_sites - 1) // 4


def _require_odd(n: int) -> None:
    if n % 2 == 0 or n < 5:
        raise ValueError(f"frustrated rings need odd N >= 5, got {n}")


def _frustrated_couplings(spec: RingSpec) -> np.ndarray:
    n = spec.n_sites
    _require_odd(n)
    jj = np.full(n, float(spec.j))
    jj[(n + 1) // 2 - 1] = spec.jw
    jj[(n - 1) // 2 - 1] = spec.jw_prime
    jj[n - 1] = -spec.jf
    return jj


def frustrated_ring(n: int, jw: float = 0.5, jw_prime: float = 0.55, jf: float = 0.45, field_h: float = 1.0) -> CouplingConfig:
    """Odd ring with weak bonds ``jw`` at (N+1)/2 and ``jw_prime`` at (N-1)/2 and ``J_N = -jf``.

    ``jf`` is the positive magnitude of the antiferromagnetic bond.
    """
    spec = RingSpec(n, jw, jw_prime, jf, field_h=field_h)
    kind = "symmetric" if jw == jw_prime else "broken"
    return CouplingConfig(n, tuple(_frustrated_couplings(spec)), field_h, f"frustrated-{kind}-N{n}")


def disorder_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), DISORDER_STREAM])))


def disordered_ring(spec: RingSpec) -> CouplingConfig:
    """Frustrated ring with ``J_j`` and ``J_{N-j}`` (j = 1..floor((N-1)/4)) drawn uniformly."""
    if spec.disorder is None:
        raise ValueError("disordered_ring needs a DisorderSpec")
    jj = _frustrated_couplings(spec)
    n = spec.n_sites
    d = spec.disorder
    rng = disorder_rng(d.seed)
    lo, hi = d.interval
    for j in range(1, spec.n_rand + 1):
        a = rng.uniform(lo, hi)
        b = rng.uniform(lo, hi)
        jj[j - 1] = a
        jj[n - j - 1] = a if d.symmetric else b
    kind = "symmetric" if d.symmetric else "broken"
    return CouplingConfig(n, tuple(jj), spec.field_h, f"disordered-{kind}-N{n}-seed{d.seed}")


def uniform_chain(n: int, j: float = 1.0, field_h: float = 1.0) -> CouplingConfig:
    if n < 2:
        raise ValueError("uniform chain needs N >= 2")
    return CouplingConfig(n, (float(j),) * n, field_h, f"uniform-N{n}")


def is_reflection_symmetric(config: CouplingConfig, tol: float = SYMMETRY_TOL) -> bool:
    """``J_j = J_{N-j}`` for j = 1..N-1."""
    jj = config.j[: config.n_sites - 1]
    return bool(np.all(np.abs(jj - jj[::-1]) <= tol))


def is_translation_invariant(config: CouplingConfig, tol: float = SYMMETRY_TOL) -> bool:
    jj = config.j
    return bool(np.all(np.abs(jj - jj[0]) <= tol))

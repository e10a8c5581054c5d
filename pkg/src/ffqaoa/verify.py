"""Oracle-equivalence checks: free-fermion pipeline against dense ED and internal identities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ed
from .evolution import (
    EvolutionCache,
    QaoaParams,
    energy_of_unitary,
    evolve,
    fast_energy_grad,
    momentum_energy,
    qaoa_energy,
    qaoa_gradient,
    random_gauge,
    thouless_z,
    verify_ph_structure,
)
from .models import frustrated_ring, uniform_chain
from .nambu import CouplingConfig, reflection_operator
from .spectrum import many_body_gap
from .theory import SymmetryClass, certify_gaussian_dimension, predict_pcr


@dataclass
class CheckResult:
    name: str
    tolerance: float
    errors: list[float] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.errors)

    @property
    def passed(self) -> int:
        return int(sum(e <= self.tolerance for e in self.errors))

    @property
    def worst(self) -> float:
        return float(max(self.errors)) if self.errors else 0.0

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def as_dict(self) -> dict:
        return {"passed": self.passed, "failed": self.total - self.passed, "worst": self.worst, "tolerance": self.tolerance}


def random_config(rng: np.random.Generator, n_lo: int, n_hi: int, signed_field: bool = True) -> CouplingConfig:
    n = int(rng.integers(n_lo, n_hi + 1))
    j = rng.uniform(-1.5, 1.5, n)
    h = float(rng.choice([1.0, -0.7, 1.3])) if signed_field else float(rng.uniform(0.5, 1.5))
    return CouplingConfig(n, tuple(j), h, "random")


def random_params(rng: np.random.Generator, depth: int, s_target: float | None = None) -> QaoaParams:
    s = float(rng.uniform()) if s_target is None else s_target
    return QaoaParams.from_vector(rng.uniform(0.0, 2 * np.pi, 2 * depth), s)


def fd_relative_errors(params: QaoaParams, cache: EvolutionCache, step: float = 1e-5) -> np.ndarray:
    g = qaoa_gradient(params, cache)
    v = params.vector
    fd = np.empty_like(g)
    for k in range(v.size):
        e = np.zeros_like(v)
        e[k] = step
        hi = qaoa_energy(QaoaParams.from_vector(v + e, params.s_target), cache)
        lo = qaoa_energy(QaoaParams.from_vector(v - e, params.s_target), cache)
        fd[k] = (hi - lo) / (2 * step)
    return np.abs(g - fd) / np.abs(fd)


def check_energy(rng, count=20) -> CheckResult:
    r = CheckResult("energy_vs_ed", 1e-9)
    for _ in range(count):
        c = random_config(rng, 2, 8)
        p = random_params(rng, int(rng.integers(1, 5)))
        cache = EvolutionCache.build(c)
        ref = ed.dense_energy(c, p)
        fast, _ = fast_energy_grad(p.vector, cache, p.s_target)
        r.errors.append(max(abs(qaoa_energy(p, cache) - ref), abs(fast - ref)))
    return r


def check_gap(rng, count=50) -> CheckResult:
    r = CheckResult("gap_vs_ed", 1e-9)
    for _ in range(count):
        c = random_config(rng, 2, 10)
        s = float(rng.uniform())
        r.errors.append(abs(many_body_gap(c, s) - ed.dense_gap(c, s)))
    return r


def check_gradient(rng, count=10) -> CheckResult:
    r = CheckResult("gradient_vs_fd", 1e-6)
    for _ in range(count):
        c = random_config(rng, 3, 6)
        p = random_params(rng, int(rng.integers(1, 4)))
        r.errors.append(float(np.max(fd_relative_errors(p, EvolutionCache.build(c)))))
    return r


def check_gauge(rng, count=100) -> CheckResult:
    r = CheckResult("gauge_invariance", 1e-10)
    c = frustrated_ring(7)
    cache = EvolutionCache.build(c)
    p = random_params(rng, 4)
    u = np.asarray(evolve(p, cache))
    h = cache.target(p.s_target)
    e0 = qaoa_energy(p, cache)
    for _ in range(count):
        w = random_gauge(c.n_sites, rng)
        r.errors.append(abs(energy_of_unitary(u @ w, h) - e0))
    return r


def check_structure(rng, count=20) -> CheckResult:
    r = CheckResult("ph_structure", 0.5)
    for _ in range(count):
        c = random_config(rng, 2, 8)
        u = evolve(random_params(rng, int(rng.integers(1, 6))), EvolutionCache.build(c))
        r.errors.append(0.0 if verify_ph_structure(u) else 1.0)
    return r


def check_reflection(rng, count=10) -> CheckResult:
    r = CheckResult("reflection_symmetry", 1e-10)
    for _ in range(count):
        n = int(rng.choice([5, 7, 9]))
        for h in (1.0, -1.0):
            c = frustrated_ring(n, 0.5, 0.5, 0.45, field_h=h)
            u = np.asarray(evolve(random_params(rng, 3), EvolutionCache.build(c)))
            pr = reflection_operator(n)
            comm = u @ pr - pr @ u if h > 0 else u @ pr + pr @ u
            r.errors.append(float(np.linalg.norm(comm, 2)))
            if h > 0:
                z = thouless_z(u).z
                p = np.fliplr(np.eye(n))
                r.errors.append(float(np.linalg.norm(z @ p + p @ z, 2)))
                r.errors.append(float(np.max(np.abs(z + z.T))))
    return r


def check_momentum(rng, count=5) -> CheckResult:
    r = CheckResult("momentum_vs_real_space", 1e-10)
    for _ in range(count):
        n = int(rng.choice([4, 6, 8]))
        c = uniform_chain(n, field_h=float(rng.choice([1.0, -1.0])))
        p = random_params(rng, 4)
        r.errors.append(abs(momentum_energy(p, c) - qaoa_energy(p, EvolutionCache.build(c))))
    return r


def check_rank() -> CheckResult:
    r = CheckResult("rank_certificate", 0.5)
    for cls in (SymmetryClass.GENERAL, SymmetryClass.REFLECTION_SYMMETRIC):
        for n in (3, 4, 5, 6):
            r.errors.append(abs(certify_gaussian_dimension(n, cls) - predict_pcr(n, cls).dim_f))
    return r


def run_verification(seed: int = 0, scale: float = 1.0) -> dict[str, CheckResult]:
    """Runs every check; ``scale`` < 1 shrinks the instance counts proportionally."""
    rng = np.random.default_rng(seed)

    def k(n: int) -> int:
        return max(1, int(round(n * scale)))

    checks = [
        check_energy(rng, k(20)),
        check_gap(rng, k(50)),
        check_gradient(rng, k(10)),
        check_gauge(rng, k(100)),
        check_structure(rng, k(20)),
        check_reflection(rng, k(10)),
        check_momentum(rng, k(5)),
        check_rank(),
    ]
    return {c.name: c for c in checks}

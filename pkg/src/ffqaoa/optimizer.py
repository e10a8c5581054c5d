"""Multistart QAOA minimization, residual energies and the empirical critical depth.

Seeding: restart ``k`` of an experiment with master seed ``m`` draws its initial
angles from ``PCG64(SeedSequence([m, k]))``.  The derived 64-bit restart seed stored
in each RunRecord is ``SeedSequence([m, k]).generate_state(1, uint64)[0]`` and
``optimize_once`` with that seed reproduces the restart on its own.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .evolution import EvolutionCache, QaoaParams, qaoa_energy
from .nambu import CouplingConfig
from .theory import classify, predict_pcr

STATUS_NAMES = {
    _kernels.STATUS_GTOL: "gtol",
    _kernels.STATUS_MAXITER: "maxiter",
    _kernels.STATUS_PRECISION: "precision",
}


class NumericalFault(ArithmeticError):
    """A non-finite energy or gradient appeared during descent."""


@dataclass(frozen=True)
class OptimizerSettings:
    n_samples: int = 100
    init_low: float = 0.0
    init_high: float = 2 * math.pi
    seed: int = 0
    gtol: float = 1e-10
    max_iterations: int = 10000
    numerical_zero: float = 1e-12

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not (self.gtol > 0 and self.numerical_zero > 0 and self.max_iterations > 0):
            raise ValueError("tolerances and iteration limit must be positive")
        if not self.init_low < self.init_high:
            raise ValueError("init range must be non-empty")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class RunRecord:
    seed: int
    restart: int
    depth: int
    s_target: float
    initial_angles: tuple[float, ...]
    final_angles: tuple[float, ...]
    final_energy: float
    ground_energy: float
    residual_energy_per_site: float
    iterations: int
    evaluations: int
    converged: bool
    status: str
    numerical_zero: float = 1e-12

    @property
    def success(self) -> bool:
        """Converged and within the numerical zero; max-iteration runs count as failures."""
        return self.converged and self.residual_energy_per_site <= self.numerical_zero


def restart_seed(master: int, restart: int) -> int:
    return int(np.random.SeedSequence([int(master), int(restart)]).generate_state(1, np.uint64)[0])


def initial_angles(seed: int, depth: int, settings: OptimizerSettings) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return rng.uniform(settings.init_low, settings.init_high, 2 * depth)


@dataclass
class Problem:
    """A target instance bound to its evolution cache; reusable across restarts."""

    config: CouplingConfig
    s_target: float
    cache: EvolutionCache = field(init=False)
    ground_energy: float = field(init=False)

    def __post_init__(self) -> None:
        self.cache = EvolutionCache.build(self.config)
        self.ground_energy = self.cache.ground_energy(self.s_target)
        self._args = self.cache.kernel_args(self.s_target)

    def energy(self, theta: np.ndarray) -> float:
        return float(_kernels.energy(np.ascontiguousarray(theta, dtype=float), *self._args))

    def residual(self, energy: float) -> float:
        return (energy - self.ground_energy) / self.config.n_sites


def _run(problem: Problem, depth: int, seed: int, restart: int, settings: OptimizerSettings) -> RunRecord:
    x0 = initial_angles(seed, depth, settings)
    x, f, g, it, nfev, status = _kernels.bfgs(x0, settings.gtol, settings.max_iterations, *problem._args)
    if not (np.isfinite(f) and np.all(np.isfinite(g)) and np.all(np.isfinite(x))):
        raise NumericalFault(f"non-finite energy or gradient (seed {seed}, depth {depth})")
    return RunRecord(
        seed=int(seed),
        restart=int(restart),
        depth=int(depth),
        s_target=problem.s_target,
        initial_angles=tuple(float(v) for v in x0),
        final_angles=tuple(float(v) for v in x),
        final_energy=float(f),
        ground_energy=problem.ground_energy,
        residual_energy_per_site=problem.residual(float(f)),
        iterations=int(it),
        evaluations=int(nfev),
        converged=status != _kernels.STATUS_MAXITER,
        status=STATUS_NAMES[int(status)],
        numerical_zero=settings.numerical_zero,
    )


def optimize_once(
    config: CouplingConfig,
    p: int,
    s_target: float,
    seed: int,
    settings: OptimizerSettings | None = None,
    problem: Problem | None = None,
) -> RunRecord:
    """One BFGS descent from uniform random angles drawn with ``seed``."""
    if p < 1:
        raise ValueError("depth must be >= 1")
    settings = settings or OptimizerSettings()
    problem = problem or Problem(config, s_target)
    return _run(problem, p, seed, 0, settings)


def _map(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def residual_distribution(
    config: CouplingConfig,
    p: int,
    s_target: float,
    settings: OptimizerSettings | None = None,
    threads: int = 1,
    stop_on_success: bool = False,
    problem: Problem | None = None,
) -> list[RunRecord]:
    """``n_samples`` restarts sorted by restart index.

    With ``stop_on_success`` the list ends at the first successful restart, whatever
    order the workers finished in, so the output does not depend on ``threads``.
    """
    settings = settings or OptimizerSettings()
    problem = problem or Problem(config, s_target)

    def job(k: int) -> RunRecord:
        return _run(problem, p, restart_seed(settings.seed, k), k, settings)

    if not stop_on_success:
        return _map(job, list(range(settings.n_samples)), threads)
    records: list[RunRecord] = []
    chunk = max(1, threads)
    for start in range(0, settings.n_samples, chunk):
        batch = _map(job, list(range(start, min(start + chunk, settings.n_samples))), threads)
        for rec in batch:
            records.append(rec)
            if rec.success:
                return records
    return records


@dataclass(frozen=True)
class DepthScan:
    """Outcome of an ascending critical-depth scan."""

    p_critical: int | None
    predicted: int
    min_residual: dict[int, float]
    successes: dict[int, int]
    runs: dict[int, list[RunRecord]]
    target_gap_to_initial: float

    @property
    def found(self) -> bool:
        return self.p_critical is not None


def critical_depth_scan(
    config: CouplingConfig,
    s_target: float,
    p_lo: int | None = None,
    p_hi: int | None = None,
    settings: OptimizerSettings | None = None,
    threads: int = 1,
    early_exit: bool = True,
    window: int = 5,
) -> DepthScan:
    """Smallest depth in ``[p_lo, p_hi]`` at which any restart reaches numerical zero.

    The default range is the predicted critical depth plus or minus ``window``.
    With ``early_exit`` each depth stops at its first success and the scan stops
    at the first successful depth.
    """
    settings = settings or OptimizerSettings()
    predicted = predict_pcr(config.n_sites, classify(config)).p_critical
    lo = max(1, predicted - window) if p_lo is None else int(p_lo)
    hi = predicted + window if p_hi is None else int(p_hi)
    if lo > hi:
        raise ValueError("p_lo must not exceed p_hi")
    problem = Problem(config, s_target)
    min_res: dict[int, float] = {}
    succ: dict[int, int] = {}
    runs: dict[int, list[RunRecord]] = {}
    found = None
    for p in range(lo, hi + 1):
        recs = residual_distribution(config, p, s_target, settings, threads, stop_on_success=early_exit, problem=problem)
        runs[p] = recs
        min_res[p] = min(r.residual_energy_per_site for r in recs)
        succ[p] = sum(r.success for r in recs)
        if succ[p] and found is None:
            found = p
            if early_exit:
                break
    initial = -(1.0 - s_target) * config.n_sites * abs(config.field_h)
    return DepthScan(found, predicted, min_res, succ, runs, problem.ground_energy - initial)


def critical_depth_search(
    config: CouplingConfig,
    s_target: float,
    p_lo: int | None = None,
    p_hi: int | None = None,
    settings: OptimizerSettings | None = None,
    threads: int = 1,
) -> int | None:
    """The empirical critical depth, or ``None`` when no depth in range succeeds."""
    return critical_depth_scan(config, s_target, p_lo, p_hi, settings, threads).p_critical


def revalidate(record: RunRecord, config: CouplingConfig) -> float:
    """Energy at the recorded optimum through the dense eigendecomposition path."""
    params = QaoaParams.from_vector(record.final_angles, record.s_target)
    return qaoa_energy(params, EvolutionCache.build(config))


def success_fraction(records: Iterable[RunRecord]) -> float:
    recs = list(records)
    return sum(r.success for r in recs) / len(recs) if recs else 0.0

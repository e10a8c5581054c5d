"""Experiment configuration: a TOML document validated by pydantic (unknown keys rejected).

Example::

    kind = "critical-depth"
    seed = 1234
    s_target = 1.0

    [model]
    family = "frustrated"
    n_sites = 13
    jw = 0.5
    jw_prime = 0.55
    jf = 0.45

    [depth]
    window = 5
"""

from __future__ import annotations

import hashlib
import math
import sys
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..models import DisorderSpec, RingSpec, disordered_ring, frustrated_ring, uniform_chain
from ..nambu import CouplingConfig, FermionParity
from ..optimizer import OptimizerSettings

KINDS = ("predict", "gap-scan", "qaoa-opt", "critical-depth", "disorder-sweep", "verify")
U64_MAX = 2**64 - 1
# second SeedSequence word for disorder realizations of a sweep
REALIZATION_STREAM = 0x5EED


class ConfigError(ValueError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelSpec(_Section):
    family: Literal["frustrated", "disordered", "uniform", "custom"] = "frustrated"
    n_sites: int = Field(13, ge=2)
    j: float = 1.0
    jw: float = 0.5
    jw_prime: Optional[float] = None
    jf: float = 0.45
    symmetric: bool = False
    field_h: float = 1.0
    couplings: Optional[list[float]] = None
    disorder_seed: Optional[int] = Field(None, ge=0, le=U64_MAX)

    @field_validator("field_h")
    @classmethod
    def _nonzero_field(cls, v: float) -> float:
        if v == 0 or not math.isfinite(v):
            raise ValueError("field_h must be finite and nonzero")
        return v

    @model_validator(mode="after")
    def _consistent(self) -> "ModelSpec":
        if self.family in ("frustrated", "disordered") and (self.n_sites % 2 == 0 or self.n_sites < 5):
            raise ValueError("frustrated families need odd n_sites >= 5")
        if self.family == "custom":
            if self.couplings is None or len(self.couplings) != self.n_sites:
                raise ValueError("custom family needs exactly n_sites couplings")
        elif self.couplings is not None:
            raise ValueError("couplings are only accepted for the custom family")
        return self

    @property
    def effective_jw_prime(self) -> float:
        if self.jw_prime is not None:
            return self.jw_prime
        return self.jw if self.symmetric else 0.55

    def ring_spec(self, disorder_seed: int | None = None) -> RingSpec:
        seed = self.disorder_seed if disorder_seed is None else disorder_seed
        disorder = None if seed is None else DisorderSpec(int(seed), self.symmetric)
        return RingSpec(self.n_sites, self.jw, self.effective_jw_prime, self.jf, self.j, self.field_h, disorder)

    def build(self, disorder_seed: int | None = None) -> CouplingConfig:
        if self.family == "uniform":
            return uniform_chain(self.n_sites, self.j, self.field_h)
        if self.family == "custom":
            return CouplingConfig(self.n_sites, tuple(self.couplings), self.field_h, "custom")
        if self.family == "frustrated":
            return frustrated_ring(self.n_sites, self.jw, self.effective_jw_prime, self.jf, self.field_h)
        spec = self.ring_spec(disorder_seed)
        if spec.disorder is None:
            raise ConfigError("disordered family needs model.disorder_seed (or a disorder-sweep)")
        return disordered_ring(spec)


class DepthSpec(_Section):
    p: Optional[int] = Field(None, ge=1)
    p_lo: Optional[int] = Field(None, ge=1)
    p_hi: Optional[int] = Field(None, ge=1)
    window: int = Field(5, ge=0)
    early_exit: bool = True
    depths: Optional[list[int]] = None

    @model_validator(mode="after")
    def _order(self) -> "DepthSpec":
        if self.p_lo is not None and self.p_hi is not None and self.p_lo > self.p_hi:
            raise ValueError("p_lo must not exceed p_hi")
        if self.depths is not None and (not self.depths or min(self.depths) < 1):
            raise ValueError("depths must be a non-empty list of positive integers")
        return self


class OptimizerSpec(_Section):
    n_samples: int = Field(100, ge=1)
    init_low: float = 0.0
    init_high: float = 2 * math.pi
    gtol: float = Field(1e-10, gt=0)
    max_iterations: int = Field(10000, ge=1)
    numerical_zero: float = Field(1e-12, gt=0)

    def settings(self, seed: int) -> OptimizerSettings:
        return OptimizerSettings(
            n_samples=self.n_samples,
            init_low=self.init_low,
            init_high=self.init_high,
            seed=seed,
            gtol=self.gtol,
            max_iterations=self.max_iterations,
            numerical_zero=self.numerical_zero,
        )


class GapSpec(_Section):
    s_min: float = Field(0.0, ge=0.0, le=1.0)
    s_max: float = Field(1.0, ge=0.0, le=1.0)
    points: int = Field(501, ge=0)
    sector: Literal["even", "odd", "both"] = "even"
    refine: bool = True
    precise: bool = False

    @property
    def parity(self) -> FermionParity | None:
        return None if self.sector == "both" else FermionParity.parse(self.sector)

    def grid(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.points)


class HistogramSpec(_Section):
    log10_lo: float = -14.0
    log10_hi: float = 0.0
    bins: int = Field(14, ge=1)

    def edges(self) -> list[float]:
        # parsed from decimal text so that integer exponents give exact powers of ten
        return [float(f"1e{e:.15g}") for e in np.linspace(self.log10_lo, self.log10_hi, self.bins + 1)]


class DisorderSweepSpec(_Section):
    realizations: int = Field(10, ge=1)
    gap: bool = False


class VerifySpec(_Section):
    scale: float = Field(1.0, gt=0, le=1.0)


class ExperimentConfig(_Section):
    kind: Literal["predict", "gap-scan", "qaoa-opt", "critical-depth", "disorder-sweep", "verify"]
    seed: int = Field(0, ge=0, le=U64_MAX)
    s_target: float = Field(1.0, ge=0.0, le=1.0)
    threads: int = Field(1, ge=1)
    output_dir: str = "results"
    emit: list[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    model: ModelSpec = Field(default_factory=ModelSpec)
    depth: DepthSpec = Field(default_factory=DepthSpec)
    optimizer: OptimizerSpec = Field(default_factory=OptimizerSpec)
    gap: GapSpec = Field(default_factory=GapSpec)
    histogram: HistogramSpec = Field(default_factory=HistogramSpec)
    disorder: DisorderSweepSpec = Field(default_factory=DisorderSweepSpec)
    verify: VerifySpec = Field(default_factory=VerifySpec)

    @model_validator(mode="after")
    def _kind_needs(self) -> "ExperimentConfig":
        if self.kind == "disorder-sweep" and self.model.family != "disordered":
            raise ValueError("disorder-sweep needs model.family = 'disordered'")
        return self

    def to_toml(self) -> str:
        return tomli_w.dumps(self.model_dump(mode="json", exclude_none=True))

    def sha256(self) -> str:
        return hashlib.sha256(self.to_toml().encode()).hexdigest()

    def realization_seed(self, index: int) -> int:
        """Disorder seed of realization ``index`` derived from the master seed."""
        ss = np.random.SeedSequence([self.seed, REALIZATION_STREAM, int(index)])
        return int(ss.generate_state(1, np.uint64)[0])


def _set_dotted(tree: dict, key: str, value: Any) -> None:
    parts = key.split(".")
    node = tree
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override {key!r} descends into a non-table value")
        node = nxt
    node[parts[-1]] = value


def parse_override(text: str) -> tuple[str, Any]:
    """``key.sub=value`` with the value read as a TOML literal, else as a bare string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def load_tree(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc


def build_config(tree: dict, overrides: list[str] | None = None, **top: Any) -> ExperimentConfig:
    tree = {k: (dict(v) if isinstance(v, dict) else v) for k, v in tree.items()}
    for k, v in top.items():
        if v is not None:
            tree[k] = v
    for item in overrides or []:
        key, value = parse_override(item)
        _set_dotted(tree, key, value)
    try:
        return ExperimentConfig.model_validate(tree)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, overrides: list[str] | None = None, **top: Any) -> tuple[ExperimentConfig, bytes]:
    """Parse a config file; returns the validated config and the raw bytes read."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not UTF-8: {exc}") from exc
    return build_config(load_tree(text), overrides, **top), raw


def parse_config(text: str) -> ExperimentConfig:
    return build_config(load_tree(text))

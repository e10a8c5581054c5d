"""Experiment orchestration and result persistence.

Every experiment writes one directory::

    manifest.json   config hash, tool version, timestamps, file list
    config.toml     the effective configuration after overrides
    summary.json    kind-specific results
    runs.csv        one row per optimization restart (optimizer kinds)
    gap_curve.csv   gap scan rows (gap-scan)
    residual_histogram.csv   (qaoa-opt)

``config_sha256`` hashes the ingested config file byte for byte (the canonical
``config.toml`` when the config was built in memory); ``effective_config_sha256``
hashes the written ``config.toml``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import math
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .. import __version__
from ..models import is_reflection_symmetric
from ..nambu import CouplingConfig
from ..optimizer import RunRecord, critical_depth_scan, residual_distribution
from ..spectrum import Bottleneck, GapScan, find_bottleneck, gap_scan
from ..theory import classify, predict_pcr
from ..verify import run_verification
from .config import ExperimentConfig

RUN_COLUMNS = (
    "realization",
    "depth",
    "restart",
    "seed",
    "s_target",
    "final_energy",
    "ground_energy",
    "residual_energy_per_site",
    "iterations",
    "evaluations",
    "converged",
    "status",
    "success",
    "initial_angles",
    "final_angles",
)


def fmt(x: Any) -> str:
    """Locale-independent text with full double precision for floats."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(float(x), ".17g")
    return str(x)


def _angles(v: Sequence[float]) -> str:
    return " ".join(fmt(float(a)) for a in v)


def _parse_angles(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split()) if text.strip() else ()


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value if not hasattr(obj, "name") else obj.name.lower()
    return obj


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    _write_text(path, buf.getvalue())
    return path


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class ResultBundle:
    config: ExperimentConfig
    directory: Path
    manifest: dict
    summary: dict
    records: list[tuple[int, RunRecord]] = field(default_factory=list)
    gap: GapScan | None = None

    @property
    def residuals(self) -> list[float]:
        return [r.residual_energy_per_site for _, r in self.records]


def config_summary(config: CouplingConfig) -> dict:
    return {
        "label": config.label,
        "n_sites": config.n_sites,
        "couplings": list(config.couplings),
        "field_h": config.field_h,
        "reflection_symmetric": is_reflection_symmetric(config),
        "symmetry_class": classify(config).value,
    }


def _bottleneck_dict(b: Bottleneck) -> dict:
    return {
        "s_b": float(b.s_min),
        "s_b_digits": str(b.s_min),
        "delta_min": float(b.delta_min),
        "delta_min_digits": str(b.delta_min),
        "log10_delta_min": b.log10_delta,
        "precision_digits": b.precision_digits,
    }


def _run_predict(cfg: ExperimentConfig) -> tuple[dict, list, GapScan | None]:
    config = cfg.model.build()
    cls = classify(config)
    report = predict_pcr(config.n_sites, cls)
    return {"model": config_summary(config), "prediction": report.as_dict()}, [], None


def _run_gap(cfg: ExperimentConfig) -> tuple[dict, list, GapScan | None]:
    config = cfg.model.build()
    sector = cfg.gap.parity
    scan = gap_scan(config, cfg.gap.grid(), sector)
    summary: dict = {
        "model": config_summary(config),
        "sector": cfg.gap.sector,
        "points": len(scan.points),
        "grid_delta_min": scan.delta_min,
        "grid_s_min": scan.s_min,
    }
    if cfg.gap.refine and len(scan.points) >= 3:
        b = find_bottleneck(config, cfg.gap.grid(), sector, precise=cfg.gap.precise)
        summary["bottleneck"] = _bottleneck_dict(b)
    return summary, [], scan


def _depth(cfg: ExperimentConfig, config: CouplingConfig) -> int:
    if cfg.depth.p is not None:
        return cfg.depth.p
    return predict_pcr(config.n_sites, classify(config)).p_critical


def _run_qaoa(cfg: ExperimentConfig) -> tuple[dict, list, GapScan | None]:
    config = cfg.model.build()
    p = _depth(cfg, config)
    settings = cfg.optimizer.settings(cfg.seed)
    recs = residual_distribution(config, p, cfg.s_target, settings, cfg.threads)
    res = [r.residual_energy_per_site for r in recs]
    summary = {
        "model": config_summary(config),
        "depth": p,
        "s_target": cfg.s_target,
        "n_samples": len(recs),
        "successes": sum(r.success for r in recs),
        "success_fraction": sum(r.success for r in recs) / len(recs),
        "min_residual": min(res),
        "median_residual": float(np.median(res)),
        "ground_energy": recs[0].ground_energy,
    }
    return summary, [(0, r) for r in recs], None


def _scan_dict(scan) -> dict:
    return {
        "p_critical": scan.p_critical,
        "predicted": scan.predicted,
        "min_residual": {str(k): v for k, v in scan.min_residual.items()},
        "successes": {str(k): v for k, v in scan.successes.items()},
        "restarts_run": {str(k): len(v) for k, v in scan.runs.items()},
        "ground_minus_initial_energy": scan.target_gap_to_initial,
    }


def _run_critical(cfg: ExperimentConfig) -> tuple[dict, list, GapScan | None]:
    config = cfg.model.build()
    settings = cfg.optimizer.settings(cfg.seed)
    scan = critical_depth_scan(
        config,
        cfg.s_target,
        cfg.depth.p_lo,
        cfg.depth.p_hi,
        settings,
        cfg.threads,
        early_exit=cfg.depth.early_exit,
        window=cfg.depth.window,
    )
    records = [(0, r) for p in sorted(scan.runs) for r in scan.runs[p]]
    summary = {"model": config_summary(config), "s_target": cfg.s_target, **_scan_dict(scan)}
    return summary, records, None


def _run_disorder(cfg: ExperimentConfig) -> tuple[dict, list, GapScan | None]:
    settings = cfg.optimizer.settings(cfg.seed)
    realizations = []
    records: list[tuple[int, RunRecord]] = []
    for r in range(cfg.disorder.realizations):
        dseed = cfg.realization_seed(r)
        config = cfg.model.build(disorder_seed=dseed)
        predicted = predict_pcr(config.n_sites, classify(config)).p_critical
        depths = cfg.depth.depths or [predicted - 1, predicted]
        entry: dict = {
            "realization": r,
            "disorder_seed": dseed,
            "model": config_summary(config),
            "predicted": predicted,
            "successes": {},
            "min_residual": {},
        }
        for p in depths:
            recs = residual_distribution(config, p, cfg.s_target, settings, cfg.threads, stop_on_success=cfg.depth.early_exit)
            entry["successes"][str(p)] = sum(x.success for x in recs)
            entry["min_residual"][str(p)] = min(x.residual_energy_per_site for x in recs)
            records.extend((r, x) for x in recs)
        ok = [p for p in depths if entry["successes"][str(p)] > 0]
        entry["first_success_depth"] = min(ok) if ok else None
        entry["success_at_predicted"] = entry["successes"].get(str(predicted), 0) > 0
        entry["success_below_predicted"] = any(p < predicted for p in ok)
        if cfg.disorder.gap:
            entry["bottleneck"] = _bottleneck_dict(find_bottleneck(config, None, cfg.gap.parity, precise=cfg.gap.precise))
        realizations.append(entry)
    summary = {
        "family": cfg.model.family,
        "symmetric": cfg.model.symmetric,
        "n_sites": cfg.model.n_sites,
        "s_target": cfg.s_target,
        "realizations": realizations,
        "all_succeed_at_predicted": all(e["success_at_predicted"] for e in realizations),
        "none_succeed_below_predicted": not any(e["success_below_predicted"] for e in realizations),
    }
    return summary, records, None


def _run_verify(cfg: ExperimentConfig) -> tuple[dict, list, GapScan | None]:
    checks = run_verification(cfg.seed, cfg.verify.scale)
    summary = {
        "checks": {k: v.as_dict() for k, v in checks.items()},
        "passed": sum(v.passed for v in checks.values()),
        "failed": sum(v.total - v.passed for v in checks.values()),
    }
    return summary, [], None


DISPATCH = {
    "predict": _run_predict,
    "gap-scan": _run_gap,
    "qaoa-opt": _run_qaoa,
    "critical-depth": _run_critical,
    "disorder-sweep": _run_disorder,
    "verify": _run_verify,
}


def write_runs(path: Path, records: Sequence[tuple[int, RunRecord]]) -> Path:
    rows = []
    for realization, r in sorted(records, key=lambda t: (t[0], t[1].depth, t[1].restart)):
        rows.append(
            (
                realization,
                r.depth,
                r.restart,
                r.seed,
                r.s_target,
                r.final_energy,
                r.ground_energy,
                r.residual_energy_per_site,
                r.iterations,
                r.evaluations,
                r.converged,
                r.status,
                r.success,
                _angles(r.initial_angles),
                _angles(r.final_angles),
            )
        )
    return _write_csv(path, RUN_COLUMNS, rows)


def read_runs(path: str | Path) -> list[dict]:
    """Parse a runs.csv back into typed dictionaries."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                {
                    "realization": int(row["realization"]),
                    "depth": int(row["depth"]),
                    "restart": int(row["restart"]),
                    "seed": int(row["seed"]),
                    "s_target": float(row["s_target"]),
                    "final_energy": float(row["final_energy"]),
                    "residual_energy_per_site": float(row["residual_energy_per_site"]),
                    "converged": row["converged"] == "true",
                    "success": row["success"] == "true",
                    "status": row["status"],
                    "initial_angles": _parse_angles(row["initial_angles"]),
                    "final_angles": _parse_angles(row["final_angles"]),
                }
            )
    return out


def emit_gap_curve(bundle: ResultBundle, path: str | Path | None = None) -> Path:
    """CSV with columns s, gap, sector_of_E0, sector_of_E1 in grid order."""
    if bundle.gap is None:
        raise ValueError("bundle holds no gap scan")
    path = Path(path) if path is not None else bundle.directory / "gap_curve.csv"
    rows = [(p.s, p.gap, p.sector_e0.name.lower(), p.sector_e1.name.lower()) for p in bundle.gap.points]
    return _write_csv(path, ("s", "gap", "sector_of_E0", "sector_of_E1"), rows)


def histogram_rows(residuals: Sequence[float], bin_edges: Sequence[float], numerical_zero: float = 1e-12) -> list[tuple]:
    """Counts per ``[lo, hi)`` bin (last bin closed); values outside are clipped into the end
    bins so the counts add up to the number of runs.  A final row counts residuals at or
    below the numerical zero."""
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or not np.all(np.isfinite(edges)) or np.any(np.diff(edges) <= 0):
        raise ValueError("bin edges must be a finite, strictly increasing sequence of length >= 2")
    res = np.asarray(residuals, dtype=float)
    idx = np.clip(np.searchsorted(edges, res, side="right") - 1, 0, edges.size - 2)
    counts = np.bincount(idx, minlength=edges.size - 1)
    rows = [("bin", edges[i], edges[i + 1], int(counts[i])) for i in range(edges.size - 1)]
    rows.append(("numerical_zero", -math.inf, numerical_zero, int(np.sum(res <= numerical_zero))))
    return rows


def emit_residual_histogram(bundle: ResultBundle, bin_edges: Sequence[float] | None = None, path: str | Path | None = None) -> Path:
    if not bundle.records:
        raise ValueError("bundle holds no optimization runs")
    edges = bundle.config.histogram.edges() if bin_edges is None else bin_edges
    path = Path(path) if path is not None else bundle.directory / "residual_histogram.csv"
    rows = [(lo, hi, c, kind) for kind, lo, hi, c in histogram_rows(bundle.residuals, edges, bundle.config.optimizer.numerical_zero)]
    return _write_csv(path, ("bin_lo", "bin_hi", "count", "row"), rows)


def run_experiment(cfg: ExperimentConfig, output_dir: str | Path | None = None, source: bytes | None = None) -> ResultBundle:
    """Run ``cfg`` and persist its bundle; ``source`` is the raw config file if there was one."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    summary, records, scan = DISPATCH[cfg.kind](cfg)
    finished = _now()
    cfg_text = cfg.to_toml()
    _write_text(out / "config.toml", cfg_text)
    bundle = ResultBundle(cfg, out, {}, _jsonable(summary), list(records), scan)
    files = ["config.toml"]
    if "json" in cfg.emit:
        _write_text(out / "summary.json", json.dumps(bundle.summary, indent=2, sort_keys=True) + "\n")
        files.append("summary.json")
    if "csv" in cfg.emit:
        if records:
            write_runs(out / "runs.csv", records)
            files.append("runs.csv")
        if scan is not None:
            emit_gap_curve(bundle)
            files.append("gap_curve.csv")
        if cfg.kind == "qaoa-opt":
            emit_residual_histogram(bundle)
            files.append("residual_histogram.csv")
    manifest = {
        "tool": "ffqaoa",
        "version": __version__,
        "kind": cfg.kind,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "config_file": "config.toml",
        "config_sha256": hashlib.sha256(source if source is not None else cfg_text.encode()).hexdigest(),
        "effective_config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest(),
        "config_source": "file" if source is not None else "canonical",
        "started_utc": started,
        "finished_utc": finished,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "files": files,
    }
    bundle.manifest = manifest
    _write_text(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return bundle

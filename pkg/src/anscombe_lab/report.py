"""Experiment orchestration and machine-readable reports.

``report.json`` holds every number that a run produces and nothing that
depends on scheduling: wall-clock times, the worker count and the output
directory live in ``manifest.json`` instead, so the same config and seed
give a byte-identical ``report.json`` for any ``workers``.
"""

from __future__ import annotations

import csv
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__, kernels
from .config import RunConfig
from .diagnostics import diagnose_from_samples, collect_diagnostic_samples, OMEGA
from .errors import HorizonExceeded, InsufficientConditioningMass
from .index_lab import (
    collect_probes,
    equivalence_from_estimates,
    implication_from_estimates,
    summarize,
)

log = logging.getLogger("anscombe_lab")

STAGES = ("probe", "equivalence", "diagnostics")
TABLE_COLUMNS = ("n", "delta", "epsilon", "event", "p_hat", "se", "limsup_proxy")


@dataclass
class RunReport:
    """Everything a run computed.  Plain JSON-compatible values only."""

    config: dict[str, Any]
    seed: int
    version: str
    scenario: str
    probes: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    equivalence: dict[str, Any] | None = None
    implication: list[dict[str, Any]] | None = None
    diagnostics: dict[str, Any] | None = None
    verdicts: dict[str, bool] = field(default_factory=dict)
    replicates: dict[str, int] = field(default_factory=dict)
    errors: list[dict[str, Any]] = field(default_factory=list)
    # scheduling-dependent; kept out of report.json
    timings: dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def partial(self) -> bool:
        return bool(self.errors)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def as_dict(self) -> dict[str, Any]:
        return {"config": self.config, "seed": self.seed, "version": self.version,
                "scenario": self.scenario, "probes": self.probes,
                "equivalence": self.equivalence, "implication": self.implication,
                "diagnostics": self.diagnostics, "verdicts": self.verdicts,
                "replicates": self.replicates, "errors": self.errors,
                "partial": self.partial}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunReport":
        keys = ("config", "seed", "version", "scenario", "probes", "equivalence",
                "implication", "diagnostics", "verdicts", "replicates", "errors")
        return cls(**{k: d[k] for k in keys})

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, allow_nan=True)


def _report_config(cfg: RunConfig) -> dict[str, Any]:
    d = cfg.as_dict()
    d.pop("workers")
    d.pop("output_dir")
    return d


def _error_record(stage: str, exc: Exception) -> dict[str, Any]:
    rec: dict[str, Any] = {"stage": stage, "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, HorizonExceeded):
        rec.update(replicate=exc.replicate, n=exc.n, max_horizon=exc.max_horizon)
    if isinstance(exc, InsufficientConditioningMass):
        rec.update(event=exc.label, count=exc.count, required=exc.required)
    return rec


def run_experiment(cfg: RunConfig, stages: Iterable[str] = STAGES,
                   strict: bool = False) -> RunReport:
    """Run the requested stages of an experiment.

    With ``strict`` the first ``HorizonExceeded`` or
    ``InsufficientConditioningMass`` propagates; otherwise it is recorded in
    ``report.errors`` (with replicate, n or event context), the affected
    table is left out, and the report is marked partial.
    """
    stages = set(stages)
    scenario = cfg.build_scenario()
    events = cfg.events(scenario)
    report = RunReport(_report_config(cfg), cfg.master_seed, __version__, scenario.name)

    def guarded(stage: str, fn):
        try:
            return fn()
        except (HorizonExceeded, InsufficientConditioningMass) as exc:
            if strict:
                raise
            log.warning("%s stage incomplete: %s", stage, exc)
            report.errors.append(_error_record(stage, exc))
            return None

    grid = cfg.probe.grid
    variants = list(cfg.probe.variants) if "probe" in stages else []
    want_eq = "equivalence" in stages and cfg.equivalence and grid is not None
    needed = list(dict.fromkeys(variants + (["d", "e"] if want_eq else [])))
    if grid is not None and needed:
        t0 = time.perf_counter()
        log.info("probing %s: variants %s, %d replicates", scenario.name, needed,
                 grid.replications)
        probes = guarded("probe", lambda: collect_probes(scenario, grid, needed, cfg.workers))
        report.timings["probe"] = time.perf_counter() - t0
        if probes is not None:
            report.replicates["probe"] = grid.replications
            est = {}
            for v in needed:
                e = guarded(f"probe:{v}", lambda v=v: summarize(
                    v, grid, probes, events, cfg.probe.min_event_count))
                if e is not None:
                    est[v] = e
            for v in variants:
                if v in est:
                    report.probes[v] = [r.as_dict() for r in est[v].rows]
            if want_eq and "d" in est and "e" in est:
                eq = equivalence_from_estimates(est["d"], est["e"])
                report.equivalence = eq.as_dict()
                report.verdicts["equivalence"] = eq.passed
            if "c_star" in est and "e" in est and "e" in variants:
                rows = implication_from_estimates(est["c_star"], est["e"])
                # informational: a finite event family only approximates the
                # conditional condition, so this never enters the verdicts
                report.implication = [r.as_dict() for r in rows]

    dcfg = cfg.diagnostics
    if "diagnostics" in stages and dcfg.enabled:
        t0 = time.perf_counter()
        log.info("diagnostics: n=%d, %d replicates", dcfg.n, dcfg.reps)
        samples = guarded("diagnostics", lambda: collect_diagnostic_samples(
            scenario, dcfg.n, dcfg.reps, cfg.workers))
        if samples is not None:
            report.replicates["diagnostics"] = dcfg.reps
            diag: dict[str, Any] = {}
            stable = guarded("diagnostics:stable", lambda: diagnose_from_samples(
                samples, events, dcfg.n, dcfg.alpha, cfg.probe.min_event_count))
            if stable is not None:
                diag["stable"] = stable.as_dict()
                report.verdicts["stable_convergence"] = stable.passed
            dist = diagnose_from_samples(samples, [OMEGA], dcfg.n, dcfg.alpha, 1)
            diag["distributional"] = dist.as_dict()
            report.verdicts["distributional_convergence"] = dist.passed
            report.diagnostics = diag
        report.timings["diagnostics"] = time.perf_counter() - t0
    return report


def _manifest(report: RunReport, cfg: RunConfig | None) -> dict[str, Any]:
    return {
        "version": report.version,
        "seed": report.seed,
        "config": cfg.as_dict() if cfg is not None else report.config,
        "kernel_backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "replicates": report.replicates,
        "wall_clock_seconds": report.timings,
        "partial": report.partial,
    }


def write_report(report: RunReport, directory: str | Path,
                 cfg: RunConfig | None = None) -> list[Path]:
    """Write ``report.json``, ``tables/<variant>.csv`` and ``manifest.json``."""
    out = Path(directory)
    tables = out / "tables"
    tables.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "report.json"
    path.write_text(report.to_json() + "\n", encoding="utf-8")
    written.append(path)
    for variant, rows in report.probes.items():
        path = tables / f"{variant}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(TABLE_COLUMNS)
            for r in rows:
                w.writerow([r[c] for c in TABLE_COLUMNS])
        written.append(path)
    path = out / "manifest.json"
    path.write_text(json.dumps(_manifest(report, cfg), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    written.append(path)
    return written


def read_report(directory: str | Path) -> RunReport:
    with (Path(directory) / "report.json").open(encoding="utf-8") as fh:
        return RunReport.from_dict(json.load(fh))

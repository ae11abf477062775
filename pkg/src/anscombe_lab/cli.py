"""Command-line entry point ``anscombe-lab``.

Exit status: 0 when every verdict passes, 2 when a verdict fails, 1 on errors
(including partial runs).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config as config_mod
from .config import RunConfig, load_config, parse_config
from .errors import AnscombeLabError
from .report import run_experiment, write_report

log = logging.getLogger("anscombe_lab")

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2

_STAGES = {
    "run": ("probe", "equivalence", "diagnostics"),
    "probe": ("probe",),
    "diagnose": ("diagnostics",),
    "equivalence": ("equivalence",),
}


def _load(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.scenario:
        cfg = parse_config(f"scenario: {args.scenario}\n")
    else:
        raise AnscombeLabError("either --config or --scenario is required")
    return cfg.with_overrides(master_seed=args.seed, workers=args.workers, output_dir=args.out)


def _cmd_experiment(args) -> int:
    cfg = _load(args)
    report = run_experiment(cfg, _STAGES[args.command])
    paths = write_report(report, cfg.output_dir, cfg)
    for p in paths:
        log.info("wrote %s", p)
    summary = {"verdicts": report.verdicts, "partial": report.partial,
               "output_dir": cfg.output_dir}
    print(json.dumps(summary, sort_keys=True))
    if report.partial:
        for e in report.errors:
            log.error("%s: %s", e["stage"], e["message"])
        return EXIT_ERROR
    return EXIT_OK if report.passed else EXIT_FAIL


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


def _path_record(x) -> dict:
    """Serialise a trajectory point or kernel draw."""
    if hasattr(x, "sorted_sample"):
        return {"sample": x.sorted_sample.tolist(), "sup_abs": float(x.sup_abs())}
    if hasattr(x, "jump_times"):
        return {"jump_times": x.jump_times.tolist(), "levels": x.levels.tolist()}
    return {"value": float(x)}


PATH_DUMP_CAP = 10_000


def _path_rows(inst, top: int) -> list[tuple[float, float]]:
    """``(t, value)`` rows for one replicate at ``n = top``.

    Real-valued sequences give ``j -> X_j`` for ``j <= min(N_top, PATH_DUMP_CAP)``;
    cadlag-valued ones give the breakpoints of the path ``X_{N_top}``.
    """
    traj = inst.trajectory
    N = inst.times.time_at(top)
    x = traj.point_at(N)
    if hasattr(x, "to_step_function"):
        step = x.to_step_function()
        return [(0.0, float(step.initial_value))] + [
            (float(t), float(v)) for t, v in zip(step.jump_times, step.values)]
    hi = min(N, PATH_DUMP_CAP)
    if hasattr(traj, "values_upto"):
        return [(float(j), float(v)) for j, v in enumerate(traj.values_upto(hi)[:hi + 1])]
    return [(float(j), float(traj.point_at(j))) for j in range(hi + 1)]


def _write_path_csv(path: Path, rows: list[tuple[float, float]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "value"))
        w.writerows(rows)


def _cmd_dump(args) -> int:
    cfg = _load(args)
    scenario = cfg.build_scenario()
    grid = cfg.probe.grid
    n_values = list(grid.n_values) if grid else [cfg.diagnostics.n]
    paths_dir = Path(args.out) / "paths" if args.out and args.dump_paths else None
    if paths_dir is not None:
        paths_dir.mkdir(parents=True, exist_ok=True)
    out = []
    for rid in range(args.reps):
        inst = scenario.instance(rid)
        rec = {"replicate": rid, "mixing": inst.mixing, "U": inst.U, "times": []}
        for n in n_values:
            N = inst.times.time_at(n)
            x = inst.trajectory.point_at(N)
            row = {"n": n, "N_n": N, "k_n": inst.times.scaling(n),
                   "functional": float(inst.kernel.functional(x))}
            if args.dump_paths:
                row["X_N"] = _path_record(x)
            rec["times"].append(row)
        if args.dump_paths:
            k = inst.kernel.sample(inst.mixing, inst.kernel_stream)
            rec["kernel_draw"] = _path_record(k)
            rows = _path_rows(inst, n_values[-1])
            rec["path"] = [list(r) for r in rows]
            if paths_dir is not None:
                _write_path_csv(paths_dir / f"replicate_{rid}.csv", rows)
        out.append(rec)
    text = json.dumps({"scenario": scenario.name, "seed": cfg.master_seed,
                       "replicates": out}, default=_jsonable, indent=2)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        path = Path(args.out) / "scenario_dump.json"
        path.write_text(text + "\n", encoding="utf-8")
        log.info("wrote %s", path)
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="anscombe-lab",
        description="Probe oscillation conditions and stable convergence for "
                    "sequences at random indices.",
        epilog="Config schema and defaults:\n" + (config_mod.__doc__ or ""),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--scenario", help="scenario name, all defaults (instead of --config)")
        sp.add_argument("--seed", type=int, help="override master_seed")
        sp.add_argument("--workers", type=int, help="override worker processes")
        sp.add_argument("--out", help="override output_dir")

    for name, help_ in (("run", "probes, equivalence and diagnostics"),
                        ("probe", "condition estimates (c, c_star, d, e)"),
                        ("diagnose", "stable-convergence diagnostics"),
                        ("equivalence", "random-time vs scaled-mixing probe comparison")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.set_defaults(func=_cmd_experiment)
    sp = sub.add_parser("scenario-dump", help="dump random times and trajectory samples")
    common(sp)
    sp.add_argument("--reps", type=int, default=3, help="replicates to dump (default 3)")
    sp.add_argument("--dump-paths", action="store_true",
                    help="include trajectory values and a kernel draw; with --out also "
                         "write paths/replicate_<id>.csv with columns t, value")
    sp.set_defaults(func=_cmd_dump)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (AnscombeLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

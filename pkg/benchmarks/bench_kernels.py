"""Time the compiled kernels against the numpy fallback on typical workloads.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case is run on identical inputs by every available backend; results are
checked to agree before timings are reported (best of ``--repeat``).
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from anscombe_lab.cadlag import StepFunction, skorohod_distance
from anscombe_lab.kernels import available_backends


def _cases(rng: np.random.Generator) -> dict[str, tuple]:
    a = np.sort(rng.normal(size=4000))
    b = np.sort(rng.normal(0.05, 1.0, size=4000))

    values = np.cumsum(rng.normal(size=200_001)) / np.sqrt(np.arange(1, 200_002))
    center = 100_000
    deltas = np.array([0.01, 0.05, 0.1, 0.2])  # narrowest first
    los = np.ceil(center * (1 - deltas)).astype(np.int64)
    his = np.floor(center * (1 + deltas)).astype(np.int64)

    W = 0.8
    z = W * rng.random(2400)
    fz = np.minimum(z / W, 1.0)

    def step(k):
        t = np.unique(rng.random(k))
        return t, np.concatenate([[rng.normal()], rng.normal(size=t.size)])

    xa, xl = step(20)
    ya, yl = step(20)
    # at the exact distance the check is feasible and sweeps every matching
    eps = float(skorohod_distance(StepFunction(xa, xl[1:], xl[0]),
                                  StepFunction(ya, yl[1:], yl[0])))
    return {
        "ks_statistic (4000 vs 4000)": ("ks_statistic", (a, b)),
        "nested_window_max (4 windows, n=1e5)": ("nested_window_max", (values, center, los, his)),
        "ecdf_sup_profile (center 2000, 1600 prefixes)": (
            "ecdf_sup_profile", (z, fz, 0.0, 1.0, 2000, 1600, 2400)),
        "skorohod_feasible (20 vs 20 jumps, at d_J1)": ("skorohod_feasible", (xa, xl, ya, yl, eps)),
    }


def _same(x, y) -> bool:
    if isinstance(x, np.ndarray):
        return bool(np.allclose(x, y, rtol=0, atol=1e-12))
    return bool(np.isclose(x, y, rtol=0, atol=1e-12)) if isinstance(x, float) else x == y


def run(repeat: int = 5, seed: int = 0) -> list[dict]:
    backends = available_backends()
    rng = np.random.default_rng(seed)
    rows = []
    for label, (fn, args) in _cases(rng).items():
        results = {name: getattr(mod, fn)(*args) for name, mod in backends.items()}
        ref = results["python"]
        if not all(_same(r, ref) for r in results.values()):
            raise RuntimeError(f"backends disagree on {label}")
        row = {"case": label}
        for name, mod in backends.items():
            f = getattr(mod, fn)
            timer = timeit.Timer(lambda f=f: f(*args))
            number, _ = timer.autorange()
            row[name] = min(timer.repeat(repeat, number)) / number
        rows.append(row)
    return rows


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the results to this file")
    args = p.parse_args(argv)
    rows = run(args.repeat, args.seed)
    have_c = "cython" in rows[0]
    if not have_c:
        print("compiled extension not built; timing the numpy fallback only", file=sys.stderr)
    print(f"{'case':48s} {'python':>12s}" + (f" {'cython':>12s} {'speedup':>8s}" if have_c else ""))
    for r in rows:
        line = f"{r['case']:48s} {r['python'] * 1e6:10.1f}us"
        if have_c:
            line += f" {r['cython'] * 1e6:10.1f}us {r['python'] / r['cython']:7.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())

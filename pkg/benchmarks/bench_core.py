"""Compiled core vs numpy fallback on the hot kernels.

    python benchmarks/bench_core.py [--repeat 5] [--json out.json]

Prints best-of-N wall time per case for both backends, the speed-up and
the largest relative difference between their outputs.
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from rgscalelab import _fallback

try:
    from rgscalelab import _core
except ImportError:  # pragma: no cover
    _core = None


def cases():
    rng = np.random.default_rng(7)
    k = np.linspace(0.0, 160.0, 4000)
    n = 4000
    base = rng.random(n)
    x = rng.random(n) * 50.0
    jp = rng.random(n) + 1j * rng.random(n)
    jm = rng.random(n) + 1j * rng.random(n)
    t = np.linspace(-3.0, 3.0, 1000)
    s = np.linspace(-2.5, 2.5, 200_000)
    return {
        "smooth_profile (2e5 points)": lambda m: m.smooth_profile(s, 1.0),
        "smooth_fourier n=1 (4000 k)": lambda m: m.smooth_fourier(k, 1, 1.0),
        "smooth_fourier n=3 (4000 k)": lambda m: m.smooth_fourier(k, 3, 1.0),
        "branch_sum (4000 modes x 1000 t)": lambda m: m.branch_sum(base, x, jp, jm, t),
    }


def run(repeat: int):
    rows = []
    for name, fn in cases().items():
        ref = np.asarray(fn(_fallback))
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=repeat))
        row = {"case": name, "python_s": t_py}
        if _core is not None:
            out = np.asarray(fn(_core))
            row["cython_s"] = min(timeit.repeat(lambda: fn(_core), number=1, repeat=repeat))
            row["speedup"] = t_py / row["cython_s"]
            row["max_rel_diff"] = float(np.max(np.abs(out - ref)) / max(np.max(np.abs(ref)), 1e-300))
        rows.append(row)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--json", default=None)
    args = p.parse_args(argv)
    rows = run(args.repeat)
    print(f"{'case':36s} {'python [s]':>11s} {'cython [s]':>11s} {'speed-up':>9s} {'max rel diff':>13s}")
    for r in rows:
        if "cython_s" in r:
            print(f"{r['case']:36s} {r['python_s']:11.4f} {r['cython_s']:11.4f} {r['speedup']:9.1f} {r['max_rel_diff']:13.2e}")
        else:
            print(f"{r['case']:36s} {r['python_s']:11.4f} {'n/a':>11s}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"schema_version": "1.0", "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()

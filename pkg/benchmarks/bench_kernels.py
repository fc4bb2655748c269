"""Time the compiled and pure-numpy kernels on filter-sized inputs.

    python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from roadpf import kernels
from roadpf.network import make_grid_network


def _cases(rng):
    net = make_grid_network(10, 100.0)
    prev = rng.uniform(0, 900, size=(2000, 2))
    cur = rng.uniform(0, 900, size=(2000, 2))
    coef = rng.random(2000)
    centers = rng.uniform(0, 900, size=(500, 2))
    verts = rng.uniform(0, 900, size=(400, 2))
    pts = rng.uniform(0, 900, size=(2000, 2))
    return {
        "pair_transition_sum 2000x2000": lambda: kernels.pair_transition_sum(prev, coef, cur, 300.0, 30.0),
        "transition_mass 500 pts x 180 segs": lambda: kernels.transition_mass(
            centers, net.seg_start, net.seg_dir, net.seg_len, 300.0, 30.0),
        "polyline_distance 2000 pts x 400 verts": lambda: kernels.polyline_distance(pts, verts),
    }


def _best(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':40s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        row = {}
        for b in backends:
            kernels.set_backend(b)
            row[b] = _best(fn, args.repeat)
        line = f"{name:40s}" + "".join(f"{row[b] * 1e3:10.2f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{row['python'] / row['compiled']:11.1f}x"
        print(line)
    if len(backends) == 1:
        print("compiled backend not built; only the numpy kernels were timed")


if __name__ == "__main__":
    main()

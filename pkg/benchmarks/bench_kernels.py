"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--points 30] [--subset 14] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from snowfold import _fallback
from snowfold.lightness import mesh_adjacency_bits, probe_radii
from snowfold.metric import snowflake
from snowfold.spaces import grid2d, random_cloud, random_connected_graph

try:
    from snowfold import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def sweep_case(m, values):
    sv = snowflake(m, 0.5)
    sd = np.ascontiguousarray(sv.dist)
    img = np.ascontiguousarray(np.sqrt(((values[:, None] - values[None]) ** 2).sum(-1)))
    radii = probe_radii(sv)
    centers = np.arange(m.n, dtype=np.int64)
    return lambda impl: impl.light_sweep(sd, img, radii, centers, float(sd.max()))


def subset_case(n, seed):
    m = random_connected_graph(n, seed)
    vals = np.random.default_rng(seed).normal(size=(n, 2))
    img = np.ascontiguousarray(np.sqrt(((vals[:, None] - vals[None]) ** 2).sum(-1)))
    adj = mesh_adjacency_bits(m)

    def run(impl):
        conn, diam = impl.subset_tables(img, adj)
        return impl.pair_minimizers(conn, diam, n)
    return run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=30, help="random cloud size for the lightness sweep")
    p.add_argument("--side", type=int, default=8, help="grid side for the projection sweep")
    p.add_argument("--subset", type=int, default=14, help="graph size for subset enumeration (<= 16)")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    cloud = random_cloud(args.points, 0)
    grid = grid2d(args.side)
    cases = [
        (f"light_sweep cloud-{args.points}", sweep_case(cloud, np.sin(7 * cloud.coords))),
        (f"light_sweep grid-{args.side} projection", sweep_case(grid, grid.coords[:, :1])),
        (f"subset tables + pairs n={args.subset}", subset_case(args.subset, 1)),
    ]
    print(f"{'kernel':40s} {'python (s)':>11s} {'cython (s)':>11s} {'speedup':>8s}")
    for name, run in cases:
        tp, outp = best_of(lambda: run(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:40s} {tp:11.4f} {'n/a':>11s} {'n/a':>8s}")
            continue
        tc, outc = best_of(lambda: run(_kernels), args.repeat)
        same = all(np.array_equal(np.sort(a) if np.ndim(a) == 1 else a, np.sort(b) if np.ndim(b) == 1 else b)
                   for a, b in zip(outp, outc))
        print(f"{name:40s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}{'' if same else '  MISMATCH'}")


if __name__ == "__main__":
    main()

"""Time the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import math
import timeit

import numpy as np

from hotspot_ipp import _kernels_py
from hotspot_ipp.field import PACIFIC_REGION
from hotspot_ipp.planner import PlannerConfig

try:
    from hotspot_ipp import _kernels as _compiled
except ImportError:
    _compiled = None


def rollout_cases(rng, n=500, depth=300):
    """Random start poses; half of the walks are confined to a Voronoi cell."""
    offsets = PlannerConfig().offsets
    bounds = np.asarray(PACIFIC_REGION.bounds, float)
    gens = rng.uniform([-155.5, 9.0], [-129.5, 35.0], size=(4, 2))
    cases = []
    for i in range(n):
        x, y = rng.uniform([-155.5, 9.0], [-129.5, 35.0])
        own = int(np.argmin(np.hypot(gens[:, 0] - x, gens[:, 1] - y))) if i % 2 else -1
        draws = rng.integers(0, len(offsets), size=(depth, _kernels_py.MAX_ATTEMPTS)).astype(np.int64)
        cases.append((x, y, rng.uniform(-math.pi, math.pi), depth, 1.0, offsets, bounds, gens, own, draws))
    return cases


def partition_case(rng, res=130, k=4):
    grid = PACIFIC_REGION.grid(res)
    gens = rng.uniform([-155.5, 9.0], [-129.5, 35.0], size=(k, 2))
    return grid, gens


def bench(label, fn, repeat):
    t = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"{label:<38}{t * 1e3:10.3f} ms")
    return t


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    rolls = rollout_cases(rng)
    grid, gens = partition_case(rng)
    backends = [("python", _kernels_py)]
    if _compiled is not None:
        backends.append(("cython", _compiled))
    else:
        print("compiled extension not built; timing the fallback only")
    times = {}
    for name, mod in backends:
        times[name] = (
            bench(f"{name}: 500 x rollout_path", lambda: [mod.rollout_path(*r) for r in rolls],
                  args.repeat),
            bench(f"{name}: nearest_generator (130x130, k=4)",
                  lambda: mod.nearest_generator(grid, gens), args.repeat),
        )
    if _compiled is not None:
        py, cy = times["python"], times["cython"]
        print(f"speed-up rollout {py[0] / cy[0]:.1f}x, partition {py[1] / cy[1]:.1f}x")
        same = all(np.array_equal(_kernels_py.rollout_path(*r), _compiled.rollout_path(*r)) for r in rolls) and \
            np.array_equal(_kernels_py.nearest_generator(grid, gens), _compiled.nearest_generator(grid, gens))
        print(f"outputs identical: {same}")


if __name__ == "__main__":
    main()

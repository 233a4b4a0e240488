"""Compare the compiled kernels against their numpy fallbacks.

Runs each hot kernel through its public entry point on a realistic
workload, once per route, checks the outputs are bit-identical, and
prints the timings. Outputs MUST match exactly: the compiled route is
an implementation detail, never a numerical variant.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from craniofit import kernels
from craniofit.bvh import TriangleBVH
from craniofit.isosurface import extract_isosurface
from craniofit.metrics import voxelize_solid
from craniofit.synthetic import icosphere, shell_defect_field


def timed(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_mc_sweep(repeat):
    vol = shell_defect_field()
    a, ta = timed(lambda: extract_isosurface(vol, 0.0, impl="native"), repeat)
    b, tb = timed(lambda: extract_isosurface(vol, 0.0, impl="numpy"), repeat)
    same = np.array_equal(a.vertices, b.vertices) and np.array_equal(a.faces, b.faces)
    return "mc_sweep", f"87^3 shell, {a.n_faces} tris", ta, tb, same


def bench_bvh_distance(repeat):
    mesh = icosphere(radius=40.0, subdivisions=5)
    bvh = TriangleBVH.build(mesh)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-60.0, 60.0, size=(20000, 3))
    a, ta = timed(lambda: bvh.distance(pts, impl="native"), repeat)
    b, tb = timed(lambda: bvh.distance(pts, impl="numpy"), repeat)
    return (
        "bvh_distance",
        f"20k pts vs {mesh.n_faces} tris",
        ta,
        tb,
        np.array_equal(a, b),
    )


def bench_voxelize_parity(repeat):
    mesh = icosphere(radius=30.0, subdivisions=4)
    dims = (96, 96, 96)
    a, ta = timed(
        lambda: voxelize_solid(mesh, (-33.0,) * 3, 0.7, dims, impl="native"), repeat
    )
    b, tb = timed(
        lambda: voxelize_solid(mesh, (-33.0,) * 3, 0.7, dims, impl="numpy"), repeat
    )
    return "voxelize_parity", "sphere into 96^3 grid", ta, tb, np.array_equal(a, b)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="take best of N runs")
    args = ap.parse_args()

    if not kernels.HAVE_NATIVE:
        raise SystemExit(
            "compiled extension not built; nothing to compare "
            "(pip install -e . rebuilds it)"
        )

    rows = [
        bench(args.repeat)
        for bench in (bench_mc_sweep, bench_bvh_distance, bench_voxelize_parity)
    ]
    print(f"{'kernel':<16} {'workload':<28} {'native':>9} {'numpy':>9} {'speedup':>8}  identical")
    mismatched = False
    for name, load, ta, tb, same in rows:
        print(
            f"{name:<16} {load:<28} {ta:>8.3f}s {tb:>8.3f}s {tb / ta:>7.1f}x  {same}"
        )
        mismatched |= not same
    if mismatched:
        raise SystemExit("FAIL: routes disagree, the extension is broken")


if __name__ == "__main__":
    main()

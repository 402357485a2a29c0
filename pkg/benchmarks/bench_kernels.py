"""Compiled vs numpy kernels on the maps the estimator actually sees.

    python3 benchmarks/bench_kernels.py [--samples 2500] [--repeat 3]
"""

import argparse
import time

import numpy as np

from artifact import _pykernels
from artifact.constructors import base_finite
from artifact.realize1d import realize, tent

try:
    from artifact import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=2500)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    maps = {"tent3": tent(3), "tent7": tent(7),
            "alpha1_M3_D1": realize(base_finite(1, 1)[0], M=3, D=1).F}
    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; timing the numpy versions only")

    print(f"{'map':<14}{'pieces':>7}  {'kernel':<16}" + "".join(f"{b:>12}" for b, _ in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for name, F in maps.items():
        arr = F.arrays()
        # a short window keeps the separated count below the sample count, as in the estimator
        xs = np.linspace(0.3, 0.3 + 4e-6, args.samples)
        times = {}
        results = {}
        for bname, mod in backends:
            t_it, orb = best_of(lambda: mod.iterate_flat(*arr, xs, args.n - 1), args.repeat)
            t_sep, cnt = best_of(lambda: mod.separated_count(orb, args.eps, args.n), args.repeat)
            times[bname] = (t_it, t_sep)
            results[bname] = (orb, cnt)
        for i, kname in enumerate(("iterate_flat", "separated_count")):
            row = f"{name:<14}{len(F.pieces):>7}  {kname:<16}"
            row += "".join(f"{times[b][i] * 1e3:>10.2f}ms" for b, _ in backends)
            if len(backends) == 2:
                row += f"{times['python'][i] / times['cython'][i]:>9.1f}x"
            print(row)
        if len(backends) == 2:
            (o1, c1), (o2, c2) = results["python"], results["cython"]
            assert c1 == c2, (name, c1, c2)
            assert np.allclose(o1, o2, rtol=0, atol=1e-12), name


if __name__ == "__main__":
    main()

"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--n 64 128 256 512] [--repeat 3]

Times dense flux-matrix assembly and bulk truncated-power evaluation on each
backend and checks that both produce the same numbers.
"""

import argparse
import time

import numpy as np

from fracbvp import _kernels
from fracbvp._assembly import flux_matrix
from fracbvp.classical import DiffusivityField
from fracbvp.fracops import PowerTermSum
from fracbvp.spaces import FemSpace, build_partition


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[64, 128, 256, 512])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    if "numba" in backends:
        # compile outside the timed region
        s = FemSpace(build_partition(8))
        flux_matrix(s, s, DiffusivityField.constant(1.0), 0.3, 0.5, backend="numba")
    K = DiffusivityField.polynomial([1.0, 0.5, 0.25])
    print(f"{'kernel':<14}{'n':>6}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}{'max diff':>12}")
    for n in args.n:
        space = FemSpace(build_partition(n))
        times, mats = [], []
        for b in backends:
            t, A = best_of(lambda: flux_matrix(space, space, K, 0.4, 0.3, backend=b), args.repeat)
            times.append(t)
            mats.append(A)
        _row("flux_matrix", n, times, mats)
    rng = np.random.default_rng(0)
    for n_terms in (64, 512):
        ts = PowerTermSum.from_terms(
            [(c, a, "left" if s else "right", q) for c, a, s, q in zip(
                rng.normal(size=n_terms), rng.uniform(size=n_terms), rng.integers(0, 2, n_terms),
                rng.uniform(-0.5, 2.0, n_terms))]
        )
        x = rng.uniform(size=200_000)
        times, vals = [], []
        for b in backends:
            t, v = best_of(lambda: ts(x, backend=b), args.repeat)
            times.append(t)
            vals.append(v)
        _row("eval_terms", n_terms, times, vals)


def _row(name, n, times, outs):
    speed = times[0] / times[-1] if len(times) > 1 else 1.0
    diff = float(np.max(np.abs(outs[0] - outs[-1]))) if len(outs) > 1 else 0.0
    print(f"{name:<14}{n:>6}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times) + f"{speed:>9.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()

"""Compare the compiled kernels with the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--sizes 250 500 1000] [--repeat 3]

Each kernel is run on identical inputs under both backends; the script
checks that the outputs agree and prints the best-of-``repeat`` wall time.
"""
import argparse
import time

import numpy as np

from krafty._backend import get_kernels
from krafty.clustering import pairwise_distances


def _best(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if np.issubdtype(a.dtype, np.floating):
        # summation order differs between backends; allow last-ulp drift
        return bool(np.allclose(a, b, rtol=1e-12, atol=1e-12))
    return np.array_equal(a, b)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        fast = get_kernels("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
    slow = get_kernels("python")
    rng = np.random.default_rng(args.seed)

    print(f"{'kernel':<18}{'n':>6}{'cython s':>12}{'python s':>12}{'speedup':>10}  match")
    for n in args.sizes:
        x = rng.standard_normal((n, 9))
        centers = rng.standard_normal((9, 9))
        a = rng.standard_normal((n, 12))
        b = rng.standard_normal((n, 12))
        dist = pairwise_distances(x)
        cases = [
            ("complete_linkage", lambda k: k.complete_linkage(dist)),
            ("assign_nearest", lambda k: k.assign_nearest(x, centers)),
            ("tkr", lambda k: k.tkr(a, b)),
        ]
        for name, call in cases:
            tf, of = _best(lambda: call(fast), args.repeat)
            ts, os_ = _best(lambda: call(slow), args.repeat)
            print(f"{name:<18}{n:>6}{tf:>12.4f}{ts:>12.4f}{ts / tf:>10.1f}  {_same(of, os_)}")


if __name__ == "__main__":
    main()

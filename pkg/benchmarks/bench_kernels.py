"""Compare the compiled and numpy kernels on the per-cell enumeration hot paths.

    python benchmarks/bench_kernels.py [--max-level 14] [--repeat 3]
"""
import argparse
import timeit

import numpy as np

from qsembed import kernels


def positions_for(level):
    # roughly the density of marked positions in the reference configuration
    return list(range(1, level + 1, 3))


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--min-level", type=int, default=8)
    ap.add_argument("--max-level", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled extension not available; only the numpy fallback will run")
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"{'kernel':<18}{'level':>6}{'cells':>12}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for level in range(args.min_level, args.max_level + 1):
        pos = positions_for(level)
        prof = {b: kernels.ones_profile(level, pos, backend=b) for b in backends}
        if len(backends) == 2:
            assert np.array_equal(prof["python"], prof["cython"])
        cases = {
            "ones_profile": lambda b: kernels.ones_profile(level, pos, backend=b),
            "ones_histogram": lambda b: kernels.ones_histogram(level, pos, backend=b),
            "adjacent_extremes": lambda b: kernels.adjacent_extremes(prof[b], backend=b),
        }
        for name, fn in cases.items():
            times = [bench(lambda b=b: fn(b), args.repeat) for b in backends]
            speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
            print(f"{name:<18}{level:>6}{3**level:>12}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()

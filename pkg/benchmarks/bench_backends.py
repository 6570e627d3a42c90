"""Time the compiled kernel primitives against the numpy fallback.

Run from a checkout with the extension built:

    python benchmarks/bench_backends.py

Each cell is the best of --repeats runs, so transient scheduler noise
mostly cancels; speedup is pure time over compiled time.
"""

import argparse
import time

import numpy as np

from gpstack.backends import pure

try:
    from gpstack.backends import _core as compiled
except ImportError:
    compiled = None

SHAPES = ((200, 3), (500, 13), (1000, 13), (2000, 26))


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    if compiled is None:
        raise SystemExit("compiled backend not built; nothing to compare")

    cases = [
        ("pairwise_sqdist", lambda m: (m.pairwise_sqdist, ())),
        ("pairwise_dist", lambda m: (m.pairwise_dist, ())),
        ("se_gram", lambda m: (m.se_gram, (1.7, 2.3))),
        ("periodic_gram", lambda m: (m.periodic_gram, (1.1, 0.9, 12.0))),
    ]

    rng = np.random.default_rng(0)
    print(f"{'function':16s} {'shape':>10s} {'pure':>10s} {'compiled':>10s} {'speedup':>8s}")
    for n, d in SHAPES:
        X = rng.standard_normal((n, d))
        for name, select in cases:
            fn_pure, extra = select(pure)
            fn_fast, _ = select(compiled)
            fn_pure(X, X, *extra)  # warm both paths before timing
            fn_fast(X, X, *extra)
            t_pure = best_of(fn_pure, (X, X) + extra, args.repeats)
            t_fast = best_of(fn_fast, (X, X) + extra, args.repeats)
            print(
                f"{name:16s} {f'{n}x{d}':>10s} {t_pure * 1e3:9.2f}ms "
                f"{t_fast * 1e3:9.2f}ms {t_pure / t_fast:7.1f}x"
            )


if __name__ == "__main__":
    main()

"""Time the compiled kernels against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--N 5000]
"""

import argparse
import timeit

import numpy as np

from mltsk.kernels import available_backends


def cases(N, D, K, L, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((D, N))
    centers = rng.standard_normal((K, D))
    widths = rng.uniform(0.5, 2.0, (K, D))
    S = rng.random((L, N))
    T = (rng.random((L, N)) < 0.3).astype(np.float64)
    Z = rng.standard_normal(N * L)
    return {
        "firing_strengths": lambda m: m.firing_strengths(X, centers, widths),
        "fuzzy_map": lambda m: m.fuzzy_map(X, centers, widths),
        "fcm_memberships": lambda m: m.fcm_memberships(np.ascontiguousarray(X.T), centers, 2.0),
        "soft_threshold": lambda m: m.soft_threshold(Z, 0.3),
        "label_ranks": lambda m: m.label_ranks(S),
        "instance_metrics": lambda m: m.instance_metrics(S, T),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=5000)
    ap.add_argument("--D", type=int, default=72)
    ap.add_argument("--K", type=int, default=8)
    ap.add_argument("--L", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    names = list(backends)
    print(f"N={args.N} D={args.D} K={args.K} L={args.L}, best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{n + ' (ms)':>14}" for n in names) + f"{'speedup':>10}")
    for kernel, fn in cases(args.N, args.D, args.K, args.L, args.seed).items():
        times = {}
        for name, mod in backends.items():
            fn(mod)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) * 1e3
        row = f"{kernel:<18}" + "".join(f"{times[n]:>14.3f}" for n in names)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()

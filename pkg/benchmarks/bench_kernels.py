"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]

Prints one line per kernel with both timings, the speedup and the largest
absolute difference between the two outputs.
"""
import argparse
import timeit

import numpy as np

from rslab import _kernels_py as py

try:
    from rslab import _kernels as cy
except ImportError:
    cy = None


def cases(quick):
    K = 400 if quick else 2000
    N = 8 if quick else 32
    rng = np.random.default_rng(0)
    t = np.linspace(0.0, 10.0, K + 1)
    tg = 10.0 * np.linspace(0.0, 1.0, K + 1) ** 3
    W = rng.random((N, K + 1)) * 1e-2
    E = rng.random((N, K + 1)) * 1e-2
    Wrev = np.ascontiguousarray(W[:, ::-1])
    G = rng.standard_normal((N, K + 1))
    r = np.exp(np.linspace(-20, 10, 600))
    w = rng.random(600)
    yield "volterra_march uniform", lambda m: m.volterra_march(t, 5.0, 1.0, 0.5, True)
    yield "volterra_march graded", lambda m: m.volterra_march(tg, 5.0, 1.0, 0.5, False)
    yield "frac_integral", lambda m: m.frac_integral(t, np.cos(t), 0.5, True)
    yield "causal_conv", lambda m: m.causal_conv(W, E, G)
    yield "lagged_sum x K", lambda m: np.stack([m.lagged_sum(Wrev, E, G, i) for i in range(1, K + 1)])
    yield "exp_sum", lambda m: m.exp_sum(r, w, t)
    yield "exp_sum_uniform", lambda m: m.exp_sum_uniform(r, w, t[1], K)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()
    if cy is None:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
    print(f"{'kernel':26s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max |diff|':>11s}")
    for name, fn in cases(args.quick):
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        if cy is None:
            print(f"{name:26s} {tp:11.4f} {'-':>11s}")
            continue
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(np.asarray(fn(py)) - np.asarray(fn(cy)))))
        print(f"{name:26s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()

"""Time the compiled kernels against their numpy fallbacks.

    python3 benchmarks/bench_core.py [--n 500] [--candidates 100] [--repeat 3]

Shapes mirror one round of the circles experiment: a Gram matrix on n
augmented points, a full dual coordinate descent pass, and RBF predictions
for n * (candidates + 1) simulated points.
"""
import argparse
import time

import numpy as np

from perflab import _fallback

try:
    from perflab import _speedups
except ImportError:
    _speedups = None


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--candidates", type=int, default=100)
    ap.add_argument("--sigma", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _speedups is None:
        raise SystemExit("compiled extension not built; run pip install -e . first")

    rng = np.random.default_rng(0)
    n = args.n
    X = np.hstack([rng.standard_normal((n, 2)), np.ones((n, 1))])
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    beta = rng.standard_normal(n) / n
    cand = np.repeat(X, args.candidates + 1, axis=0)
    cand[:, :2] += rng.uniform(-0.3, 0.3, (cand.shape[0], 2))
    K = _speedups.gram_rbf(X, X, args.sigma, False)
    Q = np.ascontiguousarray(K * np.outer(y, y))
    order = rng.permutation(n).astype(np.intp)
    upper = 1.0 / n

    def dcd(mod):
        def run():
            alpha, grad = np.zeros(n), -np.ones(n)
            mod.dcd_pass(Q, alpha, grad, upper, order)
        return run

    cases = [
        ("gram_rbf", lambda m: (lambda: m.gram_rbf(X, X, args.sigma, False))),
        ("dcd_pass", dcd),
        ("predict_rbf", lambda m: (lambda: m.predict_rbf(X, beta, cand, args.sigma, False, 40.0))),
    ]
    print(f"n={n} candidates={args.candidates} predict rows={cand.shape[0]}")
    print(f"{'routine':<12} {'compiled s':>11} {'numpy s':>10} {'speedup':>8}")
    for name, make in cases:
        tc = best_of(make(_speedups), args.repeat)
        tp = best_of(make(_fallback), args.repeat)
        print(f"{name:<12} {tc:>11.4f} {tp:>10.4f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()

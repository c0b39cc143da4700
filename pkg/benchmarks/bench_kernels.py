"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N] [--seed S]``.
Each row times one kernel on one seeded input for both backends, checks
that the two agree exactly, and reports the speedup.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from dmspaces._kernels import compiled_backend, python_backend


def random_metric(n: int, rng: np.random.Generator) -> np.ndarray:
    """Shortest-path closure of random integer weights (exact in float64)."""
    W = rng.integers(1, 20, size=(n, n)).astype(float)
    W = np.minimum(W, W.T)
    np.fill_diagonal(W, 0.0)
    return python_backend.floyd_warshall(W)


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng: np.random.Generator):
    for n in (8, 12, 16):
        D = random_metric(2 * n, rng)
        mu = np.zeros(2 * n)
        nu = np.zeros(2 * n)
        mu[:n] = rng.integers(1, 10, size=n)
        nu[n:] = rng.integers(1, 10, size=n)
        S, T = list(range(n)), list(range(n, 2 * n))
        yield f"lp_direction s={n}", lambda k, D=D, mu=mu, nu=nu, S=S, T=T: k.lp_direction(D, mu, nu, S, T, 0.0)
    for n in (50, 100, 200):
        W = rng.integers(1, 50, size=(n, n)).astype(float)
        W[rng.random((n, n)) < 0.5] = np.inf
        W = np.minimum(W, W.T)
        np.fill_diagonal(W, 0.0)
        yield f"floyd_warshall n={n}", lambda k, W=W: k.floyd_warshall(W)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if compiled_backend is None:
        print("compiled extension not importable; only the fallback is available")
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<22}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}  agree")
    ok = True
    for name, run in cases(rng):
        tp, op = best_time(lambda: run(python_backend), args.repeat)
        tc, oc = best_time(lambda: run(compiled_backend), args.repeat)
        agree = bool(np.array_equal(np.asarray(op), np.asarray(oc)))
        ok &= agree
        print(f"{name:<22}{tp:>12.5f}{tc:>14.5f}{tp / max(tc, 1e-12):>10.1f}  {agree}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

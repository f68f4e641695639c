"""Benchmark the compiled kernels against the NumPy fallback.

Runs every kernel the backend dispatches on representative workloads,
checks that both implementations agree, and prints a per-kernel timing
table. Usage:

    python benchmarks/bench_backends.py [--repeats N] [--scale small|large]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from psyman import kernels_py


def _load_compiled():
    try:
        from psyman import _kernels
    except ImportError:
        return None
    return _kernels


def best_of(fn, repeats: int) -> float:
    """Best wall-clock seconds over `repeats` calls, after one warmup."""
    fn()
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def max_diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - b)))


def workloads(scale: str):
    rng = np.random.default_rng(0)
    n = 400 if scale == "small" else 1500
    batch = 16 if scale == "small" else 64
    side = 32

    points = rng.normal(size=(n, 32))
    coords = rng.normal(size=(n, 2))
    p = np.abs(rng.normal(size=(n, n)))
    p = (p + p.T) / 2.0
    np.fill_diagonal(p, 0.0)
    p /= p.sum()

    ii, jj = np.triu_indices(n, k=1)
    d_high = rng.random(ii.shape[0]) + 0.1

    x = rng.normal(size=(batch, 4, side, side))
    w = rng.normal(size=(8, 4, 3, 3))
    b = rng.normal(size=8)
    dy = rng.normal(size=(batch, 8, side, side))
    pooled, arg = kernels_py.maxpool2_fwd(x)
    dpool = rng.normal(size=pooled.shape)

    return [
        ("pairwise_sq_dists", lambda k: k.pairwise_sq_dists(points)),
        ("tsne_forces", lambda k: k.tsne_forces(p, coords, True)),
        ("stress_forces", lambda k: k.stress_forces(ii, jj, d_high, coords)),
        ("conv2d_fwd", lambda k: k.conv2d_fwd(x, w, b)),
        ("conv2d_bwd", lambda k: k.conv2d_bwd(x, w, dy)),
        ("maxpool2_fwd", lambda k: k.maxpool2_fwd(x)),
        ("maxpool2_bwd", lambda k: k.maxpool2_bwd(arg, dpool, side, side)),
    ]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--scale", choices=("small", "large"), default="small")
    args = parser.parse_args()

    compiled = _load_compiled()
    if compiled is None:
        print("compiled extension not importable; nothing to compare")
        return 1

    rows = []
    for name, call in workloads(args.scale):
        diff = max_diff(call(kernels_py), call(compiled))
        t_numpy = best_of(lambda: call(kernels_py), args.repeats)
        t_compiled = best_of(lambda: call(compiled), args.repeats)
        rows.append((name, t_numpy, t_compiled, diff))

    print(f"scale={args.scale} repeats={args.repeats} (best-of timing)")
    print(f"{'kernel':<20} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8} {'max diff':>10}")
    for name, t_numpy, t_compiled, diff in rows:
        speedup = t_numpy / t_compiled if t_compiled > 0 else float("inf")
        print(
            f"{name:<20} {t_numpy * 1e3:>10.3f} {t_compiled * 1e3:>12.3f} "
            f"{speedup:>7.2f}x {diff:>10.2e}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

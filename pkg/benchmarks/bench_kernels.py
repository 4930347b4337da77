"""Benchmark the numba and numpy kernel backends on trainer-shaped problems.

Usage: python benchmarks/bench_kernels.py [--rows N] [--dim D] [--nnz-per-row M]

Times each CSR kernel plus one full training epoch per backend and prints a
speedup table. The numba timings exclude JIT compilation (one warmup call).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from debtlens.classifier import kernels as K


def make_problem(rows: int, dim: int, nnz_per_row: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    counts = rng.integers(max(1, nnz_per_row // 2), nnz_per_row * 2, size=rows)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    nnz = int(indptr[-1])
    indices = rng.integers(0, dim, size=nnz).astype(np.int64)
    data = rng.integers(1, 4, size=nnz).astype(np.float64)
    return indptr, indices, data


def time_call(fn, *args, repeats: int = 5) -> float:
    fn(*args)  # warmup (JIT compile for numba)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def epoch(ks, indptr, indices, data, dim, w, y, lr=0.5):
    z = ks.matvec(indptr, indices, data, w)
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    residual = (p - y) / y.size
    return w - lr * ks.rmatvec(indptr, indices, data, residual, dim)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--dim", type=int, default=2**18)
    parser.add_argument("--nnz-per-row", type=int, default=60)
    args = parser.parse_args()

    indptr, indices, data = make_problem(args.rows, args.dim, args.nnz_per_row)
    rng = np.random.default_rng(1)
    w = rng.standard_normal(args.dim) * 0.01
    v = rng.standard_normal(args.rows)
    W = rng.standard_normal((args.dim, 13)) * 0.01
    R = rng.standard_normal((args.rows, 13))
    y = (rng.random(args.rows) < 0.5).astype(np.float64)

    backends = {"numpy": K.NUMPY_KERNELS}
    if K.HAVE_NUMBA:
        backends["numba"] = K.NUMBA_KERNELS
    else:
        print("numba not installed; timing the numpy path only")

    jobs = {
        "matvec": lambda ks: ks.matvec(indptr, indices, data, w),
        "rmatvec": lambda ks: ks.rmatvec(indptr, indices, data, v, args.dim),
        "matmat(k=13)": lambda ks: ks.matmat(indptr, indices, data, W),
        "rmatmat(k=13)": lambda ks: ks.rmatmat(indptr, indices, data, R, args.dim),
        "train epoch": lambda ks: epoch(ks, indptr, indices, data, args.dim, w, y),
    }

    print(
        f"rows={args.rows} dim={args.dim} nnz={indices.size} "
        f"({indices.size / args.rows:.0f}/row)\n"
    )
    header = f"{'kernel':<14}" + "".join(f"{name:>12}" for name in backends) + (
        f"{'speedup':>10}" if len(backends) == 2 else ""
    )
    print(header)
    for name, job in jobs.items():
        times = [time_call(job, ks) for ks in backends.values()]
        row = f"{name:<14}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)

    if len(backends) == 2:
        ks_np, ks_nb = backends["numpy"], backends["numba"]
        worst = max(
            float(np.abs(ks_np.matvec(indptr, indices, data, w) - ks_nb.matvec(indptr, indices, data, w)).max()),
            float(np.abs(ks_np.rmatvec(indptr, indices, data, v, args.dim) - ks_nb.rmatvec(indptr, indices, data, v, args.dim)).max()),
        )
        print(f"\nmax |numpy - numba| over matvec/rmatvec: {worst:.3e}")


if __name__ == "__main__":
    main()

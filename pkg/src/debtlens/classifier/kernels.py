"""Sparse CSR kernels behind the baseline trainer and scorer.

Two interchangeable implementations: numba @njit loops (default when numba
is importable) and a pure-numpy path. Selection order: explicit `backend=`
argument, then the DEBTLENS_BACKEND env var ("numba" | "numpy" | "auto").
All kernels are serial and accumulate in a fixed order, so each backend is
bit-deterministic; the two backends agree to float64 rounding.

benchmarks/bench_kernels.py compares the two paths on realistic shapes.
"""

from __future__ import annotations

import os
from typing import Callable, NamedTuple

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


ENV_VAR = "DEBTLENS_BACKEND"


def _matvec_numpy(indptr, indices, data, w):
    prod = data * w[indices]
    c = np.concatenate(([0.0], np.cumsum(prod)))
    return c[indptr[1:]] - c[indptr[:-1]]


def _rmatvec_numpy(indptr, indices, data, v, dim):
    per_nnz = np.repeat(v, np.diff(indptr))
    return np.bincount(indices, weights=data * per_nnz, minlength=dim)[:dim]


def _matmat_numpy(indptr, indices, data, W):
    prod = data[:, None] * W[indices, :]
    c = np.vstack((np.zeros((1, W.shape[1])), np.cumsum(prod, axis=0)))
    return c[indptr[1:], :] - c[indptr[:-1], :]


def _rmatmat_numpy(indptr, indices, data, R, dim):
    per_nnz = np.repeat(R, np.diff(indptr), axis=0)
    out = np.zeros((dim, R.shape[1]))
    np.add.at(out, indices, data[:, None] * per_nnz)
    return out


@njit(cache=True)
def _matvec_numba(indptr, indices, data, w):
    n = indptr.size - 1
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for j in range(indptr[i], indptr[i + 1]):
            acc += data[j] * w[indices[j]]
        out[i] = acc
    return out


@njit(cache=True)
def _rmatvec_numba(indptr, indices, data, v, dim):
    out = np.zeros(dim)
    n = indptr.size - 1
    for i in range(n):
        vi = v[i]
        for j in range(indptr[i], indptr[i + 1]):
            out[indices[j]] += data[j] * vi
    return out


@njit(cache=True)
def _matmat_numba(indptr, indices, data, W):
    n = indptr.size - 1
    k = W.shape[1]
    out = np.zeros((n, k))
    for i in range(n):
        for j in range(indptr[i], indptr[i + 1]):
            d = data[j]
            col = indices[j]
            for c in range(k):
                out[i, c] += d * W[col, c]
    return out


@njit(cache=True)
def _rmatmat_numba(indptr, indices, data, R, dim):
    n = indptr.size - 1
    k = R.shape[1]
    out = np.zeros((dim, k))
    for i in range(n):
        for j in range(indptr[i], indptr[i + 1]):
            d = data[j]
            col = indices[j]
            for c in range(k):
                out[col, c] += d * R[i, c]
    return out


class KernelSet(NamedTuple):
    matvec: Callable
    rmatvec: Callable
    matmat: Callable
    rmatmat: Callable


NUMPY_KERNELS = KernelSet(_matvec_numpy, _rmatvec_numpy, _matmat_numpy, _rmatmat_numpy)
NUMBA_KERNELS = KernelSet(_matvec_numba, _rmatvec_numba, _matmat_numba, _rmatmat_numba)


def resolve_backend(backend: str | None = None) -> str:
    """Resolve the requested/env/auto backend to "numba" or "numpy"."""
    choice = backend or os.environ.get(ENV_VAR, "auto").lower()
    if choice == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    if choice == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("DEBTLENS_BACKEND=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(f"unknown backend {choice!r}; expected numba, numpy, or auto")


def kernels(backend: str | None = None) -> KernelSet:
    return NUMBA_KERNELS if resolve_backend(backend) == "numba" else NUMPY_KERNELS

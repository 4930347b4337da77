"""Hashed bag-of-words featurization.

Vocabulary-free: each token (maximal run of letters/digits) is hashed with
crc32 into a fixed-dimension count vector, stored CSR-style. Deterministic
across processes and platforms.
"""

from __future__ import annotations

import re
import zlib
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

DEFAULT_DIM = 2**18

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def token_index(token: str, dim: int = DEFAULT_DIM) -> int:
    return zlib.crc32(token.encode("utf-8")) % dim


@dataclass(frozen=True)
class HashedFeatures:
    """CSR count matrix: row i spans data[indptr[i]:indptr[i+1]]."""

    indptr: np.ndarray  # (n_rows + 1,) int64
    indices: np.ndarray  # (nnz,) int64
    data: np.ndarray  # (nnz,) float64
    dim: int

    @property
    def n_rows(self) -> int:
        return self.indptr.size - 1

    def take_rows(self, rows: Sequence[int]) -> "HashedFeatures":
        """New CSR holding the selected rows, in the given order."""
        indptr = [0]
        chunks_idx = []
        chunks_dat = []
        for r in rows:
            lo, hi = self.indptr[r], self.indptr[r + 1]
            chunks_idx.append(self.indices[lo:hi])
            chunks_dat.append(self.data[lo:hi])
            indptr.append(indptr[-1] + (hi - lo))
        return HashedFeatures(
            indptr=np.asarray(indptr, dtype=np.int64),
            indices=np.concatenate(chunks_idx) if chunks_idx else np.empty(0, np.int64),
            data=np.concatenate(chunks_dat) if chunks_dat else np.empty(0, np.float64),
            dim=self.dim,
        )

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.dim))
        for i in range(self.n_rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.indices[lo:hi]] += self.data[lo:hi]
        return out


def featurize(texts: Iterable[str], dim: int = DEFAULT_DIM) -> HashedFeatures:
    """Hash token counts for each text; in-row indices sorted for stable bytes."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts = Counter(token_index(tok, dim) for tok in tokenize(text))
        for idx in sorted(counts):
            indices.append(idx)
            data.append(float(counts[idx]))
        indptr.append(len(indices))
    return HashedFeatures(
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.asarray(indices, dtype=np.int64),
        data=np.asarray(data, dtype=np.float64),
        dim=dim,
    )

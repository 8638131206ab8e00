"""Compressed-row sparse matrices and the affine map every layer is built from.

Storage is delegated to :class:`scipy.sparse.csr_array` in canonical form
(sorted column indices, no duplicates, no stored zeros).  The CSR kernels in
scipy accumulate each row sequentially in column order, so evaluation is
bit-reproducible for a fixed build.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

SUPPORTED_DTYPES = (np.dtype(np.float64), np.dtype(np.float32))


class DimensionError(ValueError):
    """Raised when an operand has the wrong length or shape."""

    def __init__(self, what: str, expected, actual):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}")


def _check_dtype(dtype) -> np.dtype:
    dt = np.dtype(dtype)
    if dt not in SUPPORTED_DTYPES:
        raise TypeError(f"unsupported working precision {dt}; use float64 or float32")
    return dt


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class SparseMatrix:
    """Immutable CSR matrix with a fixed working precision."""

    __slots__ = ("_csr",)

    def __init__(self, csr: sp.csr_array):
        csr = sp.csr_array(csr, copy=True)
        if not csr.has_canonical_format:
            csr.sum_duplicates()
        csr.eliminate_zeros()
        csr.sort_indices()
        csr.data = _freeze(csr.data.astype(_check_dtype(csr.dtype), copy=False))
        csr.indices = _freeze(csr.indices)
        csr.indptr = _freeze(csr.indptr)
        self._csr = csr

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_entries(
        cls,
        rows: int,
        cols: int,
        entries: Iterable[tuple[int, int, float]],
        dtype=np.float64,
    ) -> "SparseMatrix":
        """Build from ``(row, col, value)`` triplets.

        Zero values are dropped.  Repeated ``(row, col)`` pairs are an error.
        """
        dt = _check_dtype(dtype)
        triplets = list(entries)
        if not triplets:
            return cls.zeros(rows, cols, dtype=dt)
        r, c, v = (np.asarray(t) for t in zip(*triplets))
        return cls.from_coo(rows, cols, r, c, v, dtype=dt)

    @classmethod
    def from_coo(cls, rows, cols, r, c, v, dtype=np.float64) -> "SparseMatrix":
        dt = _check_dtype(dtype)
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=dt)
        if r.size:
            if r.min() < 0 or r.max() >= rows:
                raise IndexError(f"row index out of range for {rows} rows")
            if c.min() < 0 or c.max() >= cols:
                raise IndexError(f"column index out of range for {cols} columns")
            keys = r * cols + c
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate (row, col) entries")
        coo = sp.coo_array((v, (r, c)), shape=(rows, cols), dtype=dt)
        return cls(coo.tocsr())

    @classmethod
    def from_dense(cls, a, dtype=np.float64) -> "SparseMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=_check_dtype(dtype)))
        return cls(sp.csr_array(a))

    @classmethod
    def identity(cls, n: int, dtype=np.float64) -> "SparseMatrix":
        return cls(sp.identity(n, dtype=_check_dtype(dtype), format="csr"))

    @classmethod
    def zeros(cls, rows: int, cols: int, dtype=np.float64) -> "SparseMatrix":
        return cls(sp.csr_array((rows, cols), dtype=_check_dtype(dtype)))

    # -- properties -------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def rows(self) -> int:
        return self._csr.shape[0]

    @property
    def cols(self) -> int:
        return self._csr.shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self._csr.dtype

    @property
    def indptr(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def data(self) -> np.ndarray:
        return self._csr.data

    @property
    def csr(self) -> sp.csr_array:
        return self._csr

    def nnz(self) -> int:
        return int(self._csr.nnz)

    # -- arithmetic -------------------------------------------------------

    def matvec(self, x) -> np.ndarray:
        """Return ``self @ x`` for a vector or a ``(cols, k)`` block of vectors."""
        x = np.asarray(x)
        if x.ndim not in (1, 2) or x.shape[0] != self.cols:
            raise DimensionError("matvec operand", self.cols, x.shape[0] if x.ndim else x.shape)
        if x.dtype != self.dtype:
            x = x.astype(self.dtype)
        return self._csr @ x

    def matmul(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise DimensionError("matmul inner dimension", self.cols, other.rows)
        return SparseMatrix(self._csr @ other._csr)

    __matmul__ = matmul

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def astype(self, dtype) -> "SparseMatrix":
        dt = _check_dtype(dtype)
        if dt == self.dtype:
            return self
        return SparseMatrix(self._csr.astype(dt))

    def scaled(self, alpha: float) -> "SparseMatrix":
        return SparseMatrix(self._csr * alpha)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.dtype == other.dtype
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    def __hash__(self):
        return hash((self.shape, self.nnz(), self.data.tobytes()))

    def __repr__(self) -> str:
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz()}, dtype={self.dtype})"


@dataclass(frozen=True, eq=False)
class SparseAffineMap:
    """``x -> weights @ x + bias``; one layer of a network."""

    weights: SparseMatrix
    bias: np.ndarray

    def __post_init__(self):
        bias = np.array(self.bias, dtype=self.weights.dtype).reshape(-1)
        if bias.shape[0] != self.weights.rows:
            raise DimensionError("bias length", self.weights.rows, bias.shape[0])
        object.__setattr__(self, "bias", _freeze(bias))

    @classmethod
    def linear(cls, weights: SparseMatrix) -> "SparseAffineMap":
        return cls(weights, np.zeros(weights.rows, dtype=weights.dtype))

    @property
    def in_dim(self) -> int:
        return self.weights.cols

    @property
    def out_dim(self) -> int:
        return self.weights.rows

    @property
    def dtype(self) -> np.dtype:
        return self.weights.dtype

    def apply(self, x) -> np.ndarray:
        y = self.weights.matvec(x)
        if y.ndim == 2:
            return y + self.bias[:, None]
        return y + self.bias

    def after(self, inner: "SparseAffineMap") -> "SparseAffineMap":
        """Fuse into a single map computing ``self(inner(x))``."""
        if inner.out_dim != self.in_dim:
            raise DimensionError("affine fusion", self.in_dim, inner.out_dim)
        w = self.weights.matmul(inner.weights)
        b = self.weights.matvec(inner.bias) + self.bias
        return SparseAffineMap(w, b)

    def astype(self, dtype) -> "SparseAffineMap":
        if np.dtype(dtype) == self.dtype:
            return self
        return SparseAffineMap(self.weights.astype(dtype), self.bias.astype(dtype))

    def nnz_bias(self) -> int:
        return int(np.count_nonzero(self.bias))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseAffineMap):
            return NotImplemented
        return self.weights == other.weights and np.array_equal(self.bias, other.bias)

    __hash__ = None


def matvec(m: SparseMatrix, x) -> np.ndarray:
    return m.matvec(x)


def apply_affine(f: SparseAffineMap, x) -> np.ndarray:
    return f.apply(x)


def block_diag(ms: Sequence[SparseMatrix]) -> SparseMatrix:
    """Block-diagonal assembly; rows, cols and nnz are the sums over blocks."""
    ms = list(ms)
    if not ms:
        raise ValueError("block_diag needs at least one matrix")
    if len(ms) == 1:
        return ms[0]
    dt = np.result_type(*(m.dtype for m in ms))
    return SparseMatrix(sp.block_diag([m.csr for m in ms], format="csr", dtype=dt))

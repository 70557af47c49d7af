"""Sparse SPD matrix storage (CSR), problem generators, and Matrix Market I/O.

The only large-matrix representation in the package.  Vectors are plain
1-D float64 numpy arrays throughout.
"""

import os

import numpy as np
import scipy.io
import scipy.sparse

from . import kernels
from .errors import DimensionMismatchError, MatrixFormatError

__all__ = [
    "SparseMatrix",
    "identity",
    "lap1d",
    "lap2d",
    "random_spd",
    "matvec",
    "pencil_combine",
    "read_matrix_market",
    "write_matrix_market",
    "dense_guard",
]

DEFAULT_DENSE_GUARD = 5000


def dense_guard() -> int:
    """Size above which densification is refused (env GEOMEAN_DENSE_GUARD)."""
    return int(os.environ.get("GEOMEAN_DENSE_GUARD", DEFAULT_DENSE_GUARD))


class SparseMatrix:
    """Immutable CSR matrix.

    Parameters
    ----------
    n_rows, n_cols : int
    row_ptr : (n_rows+1,) int64, non-decreasing, row_ptr[0] == 0
    col_idx : (nnz,) int64, strictly increasing within each row
    values : (nnz,) float64, all finite
    symmetric : bool
        Stored flag, validated once here by transpose comparison.

    Instances are treated as read-only after construction and are safe to
    share between concurrent readers.
    """

    __slots__ = ("n_rows", "n_cols", "row_ptr", "col_idx", "values", "symmetric")

    def __init__(self, n_rows, n_cols, row_ptr, col_idx, values, symmetric=False):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        self.col_idx = np.ascontiguousarray(col_idx, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.symmetric = bool(symmetric)
        self._validate()

    def _validate(self):
        if self.row_ptr.shape != (self.n_rows + 1,):
            raise ValueError("row_ptr must have length n_rows+1")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.col_idx.shape[0]:
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be non-decreasing")
        if self.col_idx.shape != self.values.shape:
            raise ValueError("col_idx and values must have equal length")
        nnz = self.col_idx.shape[0]
        if nnz:
            if self.col_idx.min() < 0 or self.col_idx.max() >= self.n_cols:
                raise ValueError("column index out of range")
            d = np.diff(self.col_idx)
            # comparisons across row boundaries are exempt
            starts = self.row_ptr[1:-1]
            boundary = np.zeros(nnz - 1, dtype=bool)
            inner = starts[(starts > 0) & (starts < nnz)]
            boundary[inner - 1] = True
            if np.any(d[~boundary] <= 0):
                raise ValueError("column indices must be strictly increasing per row")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("matrix values must be finite")
        if self.symmetric:
            if self.n_rows != self.n_cols:
                raise ValueError("symmetric flag on a non-square matrix")
            s = self.to_scipy()
            t = s.T.tocsr()
            t.sort_indices()
            if (
                not np.array_equal(s.indptr, t.indptr)
                or not np.array_equal(s.indices, t.indices)
                or not np.array_equal(s.data, t.data)
            ):
                raise ValueError("matrix flagged symmetric fails transpose comparison")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return self.col_idx.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """A @ x without input validation (hot path)."""
        return kernels.csr_matvec(self.row_ptr, self.col_idx, self.values, x)

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.csr_matrix(
            (self.values, self.col_idx, self.row_ptr), shape=self.shape
        )

    def to_dense(self) -> np.ndarray:
        guard = dense_guard()
        if max(self.n_rows, self.n_cols) > guard:
            raise ValueError(
                f"refusing to densify a {self.n_rows}x{self.n_cols} matrix "
                f"(guard {guard}; set GEOMEAN_DENSE_GUARD to override)"
            )
        return self.to_scipy().toarray()

    @classmethod
    def from_scipy(cls, s, symmetric=False) -> "SparseMatrix":
        s = s.tocsr()
        s.sum_duplicates()
        s.sort_indices()
        return cls(s.shape[0], s.shape[1], s.indptr, s.indices, s.data, symmetric)

    @classmethod
    def from_dense(cls, a, symmetric=False) -> "SparseMatrix":
        return cls.from_scipy(scipy.sparse.csr_matrix(np.asarray(a, dtype=np.float64)),
                              symmetric)

    def __repr__(self):
        return (f"SparseMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz}, "
                f"symmetric={self.symmetric})")


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def identity(n: int) -> SparseMatrix:
    """n x n identity."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return SparseMatrix(
        n, n, np.arange(n + 1), np.arange(n), np.ones(n), symmetric=True
    )


def lap1d(n: int) -> SparseMatrix:
    """1-D Laplacian: tridiagonal with diagonal 2 and off-diagonals -1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    s = scipy.sparse.diags_array(
        [-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)],
        offsets=[-1, 0, 1],
        shape=(n, n),
    )
    return SparseMatrix.from_scipy(s, symmetric=True)


def lap2d(k: int) -> SparseMatrix:
    """2-D 5-point Laplacian on a k x k grid (dimension k^2).

    Diagonal 4, horizontal and vertical grid neighbours -1.  Row-major
    grid ordering, no periodic wrap.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t = scipy.sparse.diags_array(
        [-np.ones(k - 1), 2.0 * np.ones(k), -np.ones(k - 1)],
        offsets=[-1, 0, 1],
        shape=(k, k),
    )
    eye = scipy.sparse.eye_array(k)
    s = scipy.sparse.kron(eye, t) + scipy.sparse.kron(t, eye)
    return SparseMatrix.from_scipy(s, symmetric=True)


def random_spd(n: int, seed: int) -> SparseMatrix:
    """Seeded random SPD matrix, M^T M + n*I for uniform M (dense pattern)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    guard = dense_guard()
    if n > guard:
        raise ValueError(f"random_spd size {n} exceeds dense guard {guard}")
    rng = np.random.default_rng(seed)
    m = rng.random((n, n))
    a = m.T @ m + n * np.eye(n)
    a = 0.5 * (a + a.T)
    return SparseMatrix.from_dense(a, symmetric=True)


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def matvec(a: SparseMatrix, x: np.ndarray) -> np.ndarray:
    """Validated sparse matrix-vector product A @ x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != a.n_cols:
        raise DimensionMismatchError(
            f"matvec: matrix is {a.n_rows}x{a.n_cols}, vector has length {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("matvec: vector has non-finite entries")
    return a.matvec(x)


def pencil_combine(alpha: float, a: SparseMatrix, beta: float, b: SparseMatrix) -> SparseMatrix:
    """alpha*A + beta*B on the merged sparsity pattern."""
    if a.shape != b.shape:
        raise DimensionMismatchError(f"pencil_combine: {a.shape} vs {b.shape}")
    s = alpha * a.to_scipy() + beta * b.to_scipy()
    return SparseMatrix.from_scipy(s, symmetric=a.symmetric and b.symmetric)


# --------------------------------------------------------------------------
# Matrix Market I/O
# --------------------------------------------------------------------------

def read_matrix_market(path) -> SparseMatrix:
    """Read a coordinate real Matrix Market file.

    Symmetric-tagged files are expanded to full storage and keep the
    symmetric flag; duplicate entries are summed.
    """
    try:
        _, _, _, fmt, field, symmetry = scipy.io.mminfo(path)
    except Exception as exc:
        raise MatrixFormatError(f"{path}: malformed Matrix Market header ({exc})") from exc
    if fmt != "coordinate":
        raise MatrixFormatError(f"{path}: only coordinate format is supported")
    if field not in ("real", "integer"):
        raise MatrixFormatError(f"{path}: field must be real, got {field!r}")
    try:
        coo = scipy.io.mmread(path)
    except Exception as exc:
        raise MatrixFormatError(f"{path}: failed to parse ({exc})") from exc
    return SparseMatrix.from_scipy(coo.tocsr(), symmetric=symmetry == "symmetric")


def write_matrix_market(a: SparseMatrix, path) -> None:
    """Write coordinate real Matrix Market (1-based indices on disk).

    Matrices flagged symmetric are stored as their lower triangle with a
    ``symmetric`` header so the flag survives a round trip.
    """
    coo = a.to_scipy().tocoo()
    symmetry = "symmetric" if a.symmetric else "general"
    if a.symmetric:
        keep = coo.row >= coo.col
        coo = scipy.sparse.coo_matrix(
            (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=a.shape
        )
    scipy.io.mmwrite(path, coo, symmetry=symmetry)

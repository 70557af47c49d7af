"""Dense kernels for the small projected matrices.

Everything here works on k x k arrays with k at most a few hundred:
orthogonalization, symmetric eigendecompositions, matrix square roots
(spectral for symmetric input, coupled Denman-Beavers for the general
projected matrices), small solves and Ritz values.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceError,
    NotPositiveDefiniteError,
    SingularMatrixError,
)

__all__ = [
    "SymTridiagonal",
    "mgs_orthogonalize",
    "sym_eig",
    "sqrt_spd",
    "invsqrt_spd",
    "db_sqrt_general",
    "small_solve",
    "ritz_values",
]

BREAKDOWN_TOL = 1e-12
SMALL_MATRIX_BOUND = 512


@dataclass(frozen=True)
class SymTridiagonal:
    """Symmetric tridiagonal matrix given by its diagonal and off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", np.asarray(self.diag, dtype=np.float64))
        object.__setattr__(self, "offdiag", np.asarray(self.offdiag, dtype=np.float64))
        if self.offdiag.shape[0] != max(self.diag.shape[0] - 1, 0):
            raise ValueError("offdiag must have length len(diag)-1")

    def to_dense(self) -> np.ndarray:
        t = np.diag(self.diag)
        if self.offdiag.shape[0]:
            t += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return t


def _euclidean(x, y):
    return float(x @ y)


def mgs_orthogonalize(w, basis, inner=None, breakdown_tol=BREAKDOWN_TOL):
    """Orthogonalize ``w`` against an orthonormal basis (two-pass MGS).

    Parameters
    ----------
    w : (n,) array, consumed by value (a copy is made).
    basis : (n, j) array whose columns are orthonormal under ``inner``.
    inner : callable(x, y) -> float, defaults to the Euclidean dot product.
    breakdown_tol : relative tolerance declaring the residual negligible.

    Returns
    -------
    (h, residual_norm, unit_residual)
        ``w = basis @ h + residual_norm * unit_residual``.  The second
        orthogonalization pass is always performed ("twice is enough");
        its corrections are accumulated into ``h``.  On breakdown
        (``residual_norm <= breakdown_tol * ||w||``) ``unit_residual``
        is None; breakdown is happy termination, not an error.
    """
    if inner is None:
        inner = _euclidean
    w = np.array(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise ValueError("mgs_orthogonalize: non-finite input vector")
    basis = np.asarray(basis, dtype=np.float64)
    if basis.ndim == 1:
        basis = basis[:, None]
    j = basis.shape[1]
    norm0 = np.sqrt(inner(w, w))
    h = np.zeros(j)
    for _ in range(2):
        for i in range(j):
            c = inner(basis[:, i], w)
            w -= c * basis[:, i]
            h[i] += c
    beta = np.sqrt(max(inner(w, w), 0.0))
    if beta <= breakdown_tol * norm0:
        return h, beta, None
    return h, beta, w / beta


def sym_eig(s):
    """Eigendecomposition of a symmetric matrix (or SymTridiagonal).

    Returns ``(eigenvalues ascending, orthonormal eigenvectors)`` such
    that S @ V = V @ diag(lam).
    """
    if isinstance(s, SymTridiagonal):
        if s.diag.shape[0] == 1:
            return s.diag.copy(), np.ones((1, 1))
        return scipy.linalg.eigh_tridiagonal(s.diag, s.offdiag)
    s = np.asarray(s, dtype=np.float64)
    if s.shape[0] != s.shape[1]:
        raise ValueError("sym_eig: matrix must be square")
    scale = np.abs(s).max() if s.size else 0.0
    if not np.allclose(s, s.T, atol=1e-12 * max(scale, 1.0)):
        raise ValueError("sym_eig: matrix is not symmetric")
    return np.linalg.eigh(s)


def _spectral_pow(s, power):
    lam, v = sym_eig(s)
    if lam[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"matrix has non-positive eigenvalue {lam[0]:.3e}"
        )
    r = (v * lam**power) @ v.T
    return 0.5 * (r + r.T)


def sqrt_spd(s) -> np.ndarray:
    """Spectral square root of a symmetric positive definite matrix."""
    return _spectral_pow(s, 0.5)


def invsqrt_spd(s) -> np.ndarray:
    """Spectral inverse square root of a symmetric positive definite matrix."""
    return _spectral_pow(s, -0.5)


def db_sqrt_general(m, tol=1e-13, max_iter=60):
    """Coupled Denman-Beavers iteration with determinant scaling.

    Valid for any square matrix with no eigenvalue on the closed negative
    real axis.  Returns ``(Y, Z)`` with Y ~ M^{1/2} and Z ~ M^{-1/2}.

    The iteration stops when the relative change of Y drops below ``tol``
    or when the change stagnates at its rounding floor (quadratic
    convergence reached); it raises after ``max_iter`` iterations
    otherwise, or on a singular iterate.
    """
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    if n != m.shape[1]:
        raise ValueError("db_sqrt_general: matrix must be square")
    if n > SMALL_MATRIX_BOUND:
        raise ValueError(f"db_sqrt_general: size {n} exceeds bound {SMALL_MATRIX_BOUND}")
    y = m.copy()
    z = np.eye(n)
    prev_change = np.inf
    for _ in range(max_iter):
        _, ldy = np.linalg.slogdet(y)
        _, ldz = np.linalg.slogdet(z)
        if not (np.isfinite(ldy) and np.isfinite(ldz)):
            raise SingularMatrixError("db_sqrt_general: singular iterate")
        mu = np.exp(-(ldy + ldz) / (2 * n))
        try:
            y_inv = np.linalg.inv(mu * y)
            z_inv = np.linalg.inv(mu * z)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"db_sqrt_general: {exc}") from exc
        y_next = 0.5 * (mu * y + z_inv)
        z_next = 0.5 * (mu * z + y_inv)
        change = np.linalg.norm(y_next - y) / max(np.linalg.norm(y_next), 1e-300)
        y, z = y_next, z_next
        if change <= tol:
            return y, z
        if change >= prev_change and prev_change <= 1e-6:
            # rounding floor reached; further iterations only oscillate
            return y, z
        prev_change = change
    raise ConvergenceError(
        f"db_sqrt_general: no convergence in {max_iter} iterations "
        f"(last relative change {prev_change:.2e})"
    )


def small_solve(m, rhs) -> np.ndarray:
    """Solve M @ X = RHS for a small dense, numerically nonsingular M."""
    m = np.asarray(m, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise ValueError("small_solve: matrix must be square")
    lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = np.abs(m).max() if m.size else 0.0
    if m.size and pivots.min() <= 1e-14 * scale:
        raise SingularMatrixError(
            f"small_solve: pivot {pivots.min():.3e} below threshold "
            f"{1e-14 * scale:.3e}"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def ritz_values(m) -> np.ndarray:
    """Eigenvalues of a small square matrix (complex array)."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] != m.shape[1]:
        raise ValueError("ritz_values: matrix must be square")
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"ritz_values: QR iteration failed ({exc})") from exc
    return np.asarray(vals, dtype=np.complex128)

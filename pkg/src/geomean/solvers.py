"""Conjugate-gradient solves on SPD pencils, B-inner products, and
extreme-eigenvalue estimation for the pencil B^{-1}A."""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionMismatchError, NotPositiveDefiniteError
from .sparse import SparseMatrix, matvec, pencil_combine

__all__ = [
    "CgConfig",
    "SolveStats",
    "PencilSpectrumBounds",
    "cg_solve",
    "solve_spd_pencil",
    "b_inner",
    "b_norm",
    "extreme_pencil_eigs",
]

_POWER_SEED = 1903  # fixed so eigenvalue estimates are deterministic


@dataclass(frozen=True)
class CgConfig:
    """CG stopping parameters; max_iter None means 10*n at solve time."""

    rel_tol: float = 1e-12
    max_iter: int | None = None

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class SolveStats:
    iterations: int
    final_relative_residual: float
    converged: bool

    def __post_init__(self):
        if self.final_relative_residual < 0:
            raise ValueError("final_relative_residual must be >= 0")


@dataclass(frozen=True)
class PencilSpectrumBounds:
    """Estimated extreme eigenvalues of B^{-1}A, already widened."""

    lambda_min: float
    lambda_max: float
    rel_tol_achieved: float

    def __post_init__(self):
        if not 0.0 < self.lambda_min <= self.lambda_max:
            raise ValueError("bounds must satisfy 0 < lambda_min <= lambda_max")


def cg_solve(m: SparseMatrix, b: np.ndarray, cfg: CgConfig | None = None):
    """Solve M x = b by unpreconditioned CG; M must be SPD.

    Returns ``(x, SolveStats)``.  Hitting max_iter is not an error (the
    stats record it); an indefinite direction or non-finite arithmetic
    raises.
    """
    if cfg is None:
        cfg = CgConfig()
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != m.n_rows or m.n_rows != m.n_cols:
        raise DimensionMismatchError(
            f"cg_solve: matrix {m.shape}, rhs length {b.shape}"
        )
    max_iter = cfg.max_iter if cfg.max_iter is not None else 10 * m.n_rows
    x, iters, relres, status = kernels.cg(
        m.row_ptr, m.col_idx, m.values, b, cfg.rel_tol, max_iter
    )
    if status == kernels.CG_INDEFINITE:
        raise NotPositiveDefiniteError(
            f"cg_solve: p^T M p <= 0 at iteration {iters + 1} (matrix not SPD?)"
        )
    if status == kernels.CG_NONFINITE:
        raise ArithmeticError("cg_solve: non-finite residual encountered")
    return x, SolveStats(iters, float(relres), status == kernels.CG_CONVERGED)


def solve_spd_pencil(alpha, a, beta, b, rhs, cfg=None):
    """Solve (alpha*A + beta*B) x = rhs by CG.

    The degenerate coefficient pairs fall through to plain solves on A or
    B without assembling a combined matrix.
    """
    if a.shape != b.shape:
        raise DimensionMismatchError(f"solve_spd_pencil: {a.shape} vs {b.shape}")
    if alpha == 0.0 and beta == 1.0:
        return cg_solve(b, rhs, cfg)
    if beta == 0.0 and alpha == 1.0:
        return cg_solve(a, rhs, cfg)
    return cg_solve(pencil_combine(alpha, a, beta, b), rhs, cfg)


def b_inner(b: SparseMatrix, x, y) -> float:
    """Weighted inner product x^T B y for SPD B."""
    return float(np.asarray(x) @ matvec(b, y))


def b_norm(b: SparseMatrix, x) -> float:
    """B-weighted norm, sqrt(x^T B x); raises if the form is negative."""
    x = np.asarray(x, dtype=np.float64)
    q = float(x @ matvec(b, x))
    if q < 0.0:
        scale = float(x @ x) * (np.abs(b.values).max() if b.nnz else 0.0)
        if q < -1e-13 * max(scale, 1e-300):
            raise NotPositiveDefiniteError(
                f"b_norm: negative quadratic form {q:.3e} (B not SPD?)"
            )
        q = 0.0
    return np.sqrt(q)


def _power_extreme(a, b, tol, cfg, rng, invert):
    """Generalized power iteration; returns (raw estimate, achieved diff).

    invert=False iterates z -> B^{-1} A z (largest pencil eigenvalue);
    invert=True iterates z -> A^{-1} B z, whose quotient converges to
    1/lambda_min.  The estimate is the generalized Rayleigh quotient
    z^T A z / z^T B z (or its reciprocal), which stays positive for SPD
    inputs; the plain quotient z^T w can flip sign because the iterated
    operator is non-normal.
    """
    n = a.n_rows
    z = rng.standard_normal(n)
    z /= np.linalg.norm(z)
    theta = np.nan
    achieved = np.inf
    for _ in range(500):
        az = a.matvec(z)
        bz = b.matvec(z)
        num, den = float(z @ az), float(z @ bz)
        if num <= 0.0 or den <= 0.0:
            raise NotPositiveDefiniteError("power iteration: non-positive quadratic form")
        new_theta = den / num if invert else num / den
        w = cg_solve(a, bz, cfg)[0] if invert else cg_solve(b, az, cfg)[0]
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            raise NotPositiveDefiniteError("power iteration: zero iterate")
        z = w / nrm
        if np.isfinite(theta):
            achieved = abs(new_theta - theta) / abs(new_theta)
            theta = new_theta
            if achieved <= tol:
                break
        else:
            theta = new_theta
    return theta, achieved


def extreme_pencil_eigs(a: SparseMatrix, b: SparseMatrix, tol: float = 1e-3):
    """Estimate the extreme eigenvalues of the pencil B^{-1}A.

    Power iteration on B^{-1}A gives lambda_max; power iteration on
    A^{-1}B gives 1/lambda_min.  Each runs until successive Rayleigh
    quotients differ by at most ``tol`` relative or 500 iterations.  The
    returned bounds are widened by (1 -/+ 10*tol) to enclose the true
    extremes.  Inner solves use the tight default tolerance: on
    ill-conditioned operators a loose residual gives solution errors of
    order condition * tolerance, which can flip the quotient sign.
    """
    if a.shape != b.shape:
        raise DimensionMismatchError(f"extreme_pencil_eigs: {a.shape} vs {b.shape}")
    cfg = CgConfig()
    rng = np.random.default_rng(_POWER_SEED)
    lam_max, d1 = _power_extreme(a, b, tol, cfg, rng, invert=False)
    inv_min, d2 = _power_extreme(a, b, tol, cfg, rng, invert=True)
    lam_min = 1.0 / inv_min
    lam_min, lam_max = min(lam_min, lam_max), max(lam_min, lam_max)
    return PencilSpectrumBounds(
        lambda_min=lam_min * (1.0 - 10.0 * tol),
        lambda_max=lam_max * (1.0 + 10.0 * tol),
        rel_tol_achieved=float(max(d1, d2)),
    )

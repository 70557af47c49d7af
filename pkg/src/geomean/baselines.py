"""Reference computations: a dense spectral oracle for A#B and a
Gauss-Chebyshev quadrature baseline.

Both stand in for the external dense competitors of the timing study
(a Schur-based direct method and a contour-integral method); every
report emitted for them is labelled as a stand-in.
"""

from dataclasses import dataclass

import numpy as np

from .dense import sym_eig
from .errors import DimensionMismatchError, NotPositiveDefiniteError
from .solvers import CgConfig, PencilSpectrumBounds, solve_spd_pencil
from .sparse import SparseMatrix, dense_guard

__all__ = [
    "QuadratureRule",
    "gauss_chebyshev_rule",
    "dense_geomean",
    "gauss_chebyshev_geomean",
    "relative_error",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Chebyshev nodes/weights plus the spectral scale factor c."""

    nodes: np.ndarray
    weights: np.ndarray
    count: int
    scale: float

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        nodes = np.asarray(self.nodes, dtype=np.float64)
        if not np.allclose(np.sort(nodes), np.sort(-nodes), atol=1e-15):
            raise ValueError("nodes must be symmetric about zero")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))


def gauss_chebyshev_rule(count: int, bounds: PencilSpectrumBounds) -> QuadratureRule:
    """First-kind Gauss-Chebyshev rule with c = (lmin*lmax)^{1/4}."""
    if count < 1:
        raise ValueError("count must be >= 1")
    i = np.arange(1, count + 1)
    nodes = np.cos((2 * i - 1) * np.pi / (2 * count))
    weights = np.full(count, np.pi / count)
    c = (bounds.lambda_min * bounds.lambda_max) ** 0.25
    return QuadratureRule(nodes=nodes, weights=weights, count=count, scale=c)


def _as_dense(m):
    if isinstance(m, SparseMatrix):
        return m.to_dense()
    return np.asarray(m, dtype=np.float64)


def dense_geomean(a, b) -> np.ndarray:
    """A#B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2}, all spectral.

    Dense stand-in for a direct method; accepts SparseMatrix or ndarray,
    guarded by GEOMEAN_DENSE_GUARD.
    """
    ad = _as_dense(a)
    bd = _as_dense(b)
    if ad.shape != bd.shape or ad.shape[0] != ad.shape[1]:
        raise DimensionMismatchError(f"dense_geomean: {ad.shape} vs {bd.shape}")
    guard = dense_guard()
    if ad.shape[0] > guard:
        raise ValueError(f"dense_geomean: size {ad.shape[0]} exceeds guard {guard}")
    lam, v = sym_eig(ad)
    if lam[0] <= 0.0:
        raise NotPositiveDefiniteError(f"dense_geomean: A has eigenvalue {lam[0]:.3e}")
    rt = np.sqrt(lam)
    a_half = (v * rt) @ v.T
    a_invhalf = (v / rt) @ v.T
    inner = a_invhalf @ bd @ a_invhalf
    inner = 0.5 * (inner + inner.T)
    lam2, v2 = sym_eig(inner)
    if lam2[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"dense_geomean: middle factor has eigenvalue {lam2[0]:.3e}"
        )
    mid = (v2 * np.sqrt(lam2)) @ v2.T
    g = a_half @ mid @ a_half
    return 0.5 * (g + g.T)


def gauss_chebyshev_geomean(a, b, v, count, bounds, cfg=None):
    """Quadrature baseline for (A#B)v.

    Discretizes the Markov integral for z^{-1/2} mapped to u in (-1, 1):

        (A#B)v = (1/pi) * int_{-1}^{1} c A ((1-u^2)A + c^2 u^2 B)^{-1} B v
                 du / sqrt(1-u^2)

    with c = (lmin*lmax)^{1/4} of the pencil, evaluated at the
    Gauss-Chebyshev nodes u_i = cos((2i-1)pi/(2N)); every node costs one
    sparse SPD solve.  Summation order is fixed for reproducibility.
    """
    rule = gauss_chebyshev_rule(count, bounds)
    if cfg is None:
        cfg = CgConfig()
    v = np.asarray(v, dtype=np.float64)
    bv = b.matvec(v) if isinstance(b, SparseMatrix) else np.asarray(b) @ v
    c2 = rule.scale**2
    acc = np.zeros_like(v)
    for u in rule.nodes:
        x, _ = solve_spd_pencil(1.0 - u * u, a, c2 * u * u, b, bv, cfg)
        acc += x
    scaled = (rule.scale / rule.count) * acc
    return a.matvec(scaled) if isinstance(a, SparseMatrix) else np.asarray(a) @ scaled


def relative_error(x, x_ref) -> float:
    """||x - x_ref||_2 / ||x_ref||_2."""
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    if x.shape != x_ref.shape:
        raise DimensionMismatchError("relative_error: length mismatch")
    ref_norm = float(np.linalg.norm(x_ref))
    if ref_norm == 0.0:
        raise ValueError("relative_error: zero reference")
    return float(np.linalg.norm(x - x_ref)) / ref_norm

import numpy as np
import pytest

from geomean import SparseMatrix, kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    kernels.warmup()


def conditioned_pair(n, seed, cond):
    """Seeded random SPD pair whose pencil B^{-1}A is genuinely hard:
    log-spaced eigenvalues in opposite order behind random orthogonal
    eigenvectors."""
    rng = np.random.default_rng(seed)
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d1 = np.logspace(0.0, np.log10(cond) / 2.0, n)
    d2 = np.logspace(np.log10(cond) / 2.0, 0.0, n)
    a = (q1 * d1) @ q1.T
    b = (q2 * d2) @ q2.T
    return (
        SparseMatrix.from_dense(0.5 * (a + a.T), symmetric=True),
        SparseMatrix.from_dense(0.5 * (b + b.T), symmetric=True),
    )


def random_sparse_spd(n, seed, extra_per_row=3):
    """Random sparse symmetric diagonally dominant (hence SPD) matrix."""
    rng = np.random.default_rng(seed)
    dense = np.zeros((n, n))
    for i in range(n):
        cols = rng.choice(n, size=min(extra_per_row, n), replace=False)
        dense[i, cols] = rng.standard_normal(len(cols))
    dense = 0.5 * (dense + dense.T)
    np.fill_diagonal(dense, 0.0)
    dom = np.abs(dense).sum(axis=1) + 1.0
    dense += np.diag(dom)
    return SparseMatrix.from_dense(dense, symmetric=True)

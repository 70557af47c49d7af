"""Hot numeric kernels: CSR matrix-vector product and a fused CG loop.

Two interchangeable backends are provided.  The default is numba
(``@njit`` compiled, cached on disk); a pure-numpy fallback covers
environments without a working numba.  Selection:

* environment variable ``GEOMEAN_BACKEND`` = ``auto`` | ``numba`` | ``numpy``
  (read once at import; ``auto`` picks numba when importable), or
* :func:`set_backend` at runtime.

``benchmarks/kernel_bench.py`` compares the two backends head to head.
"""

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

# CG termination status codes (shared by both backends).
CG_CONVERGED = 0
CG_MAXITER = 1
CG_INDEFINITE = 2
CG_NONFINITE = 3


def _resolve(name: str) -> str:
    if name == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; use 'auto', 'numba' or 'numpy'")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return name


_BACKEND = _resolve(os.environ.get("GEOMEAN_BACKEND", "auto"))


def get_backend() -> str:
    """Return the active backend name ('numba' or 'numpy')."""
    return _BACKEND


def set_backend(name: str) -> str:
    """Select the kernel backend at runtime; returns the resolved name."""
    global _BACKEND
    _BACKEND = _resolve(name)
    return _BACKEND


# --------------------------------------------------------------------------
# numpy fallback
# --------------------------------------------------------------------------

def _csr_matvec_numpy(row_ptr, col_idx, values, x):
    counts = np.diff(row_ptr)
    rows = np.repeat(np.arange(counts.shape[0]), counts)
    return np.bincount(rows, weights=values * x[col_idx], minlength=counts.shape[0])


def _cg_numpy(row_ptr, col_idx, values, b, rel_tol, max_iter):
    n = b.shape[0]
    x = np.zeros(n)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    bnorm = np.sqrt(rs)
    if bnorm == 0.0:
        return x, 0, 0.0, CG_CONVERGED
    tol2 = (rel_tol * bnorm) ** 2
    counts = np.diff(row_ptr)
    rows = np.repeat(np.arange(n), counts)
    k = 0
    status = CG_MAXITER
    while k < max_iter:
        Ap = np.bincount(rows, weights=values * p[col_idx], minlength=n)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            status = CG_INDEFINITE
            break
        alpha = rs / pAp
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        k += 1
        if not np.isfinite(rs_new):
            status = CG_NONFINITE
            break
        if rs_new <= tol2:
            status = CG_CONVERGED
            rs = rs_new
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return x, k, np.sqrt(rs) / bnorm, status


# --------------------------------------------------------------------------
# numba backend
# --------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True, fastmath=True)
    def _csr_matvec_numba(row_ptr, col_idx, values, x):
        n = row_ptr.shape[0] - 1
        y = np.empty(n)
        for i in range(n):
            acc = 0.0
            for k in range(row_ptr[i], row_ptr[i + 1]):
                acc += values[k] * x[col_idx[k]]
            y[i] = acc
        return y

    @njit(cache=True, fastmath=True)
    def _cg_numba(row_ptr, col_idx, values, b, rel_tol, max_iter):
        n = b.shape[0]
        x = np.zeros(n)
        r = b.copy()
        p = r.copy()
        rs = 0.0
        for i in range(n):
            rs += r[i] * r[i]
        bnorm = np.sqrt(rs)
        if bnorm == 0.0:
            return x, 0, 0.0, CG_CONVERGED
        tol2 = (rel_tol * bnorm) ** 2
        Ap = np.empty(n)
        k = 0
        status = CG_MAXITER
        while k < max_iter:
            for i in range(n):
                acc = 0.0
                for t in range(row_ptr[i], row_ptr[i + 1]):
                    acc += values[t] * p[col_idx[t]]
                Ap[i] = acc
            pAp = 0.0
            for i in range(n):
                pAp += p[i] * Ap[i]
            if pAp <= 0.0:
                status = CG_INDEFINITE
                break
            alpha = rs / pAp
            rs_new = 0.0
            for i in range(n):
                x[i] += alpha * p[i]
                r[i] -= alpha * Ap[i]
                rs_new += r[i] * r[i]
            k += 1
            if not np.isfinite(rs_new):
                status = CG_NONFINITE
                break
            if rs_new <= tol2:
                status = CG_CONVERGED
                rs = rs_new
                break
            beta = rs_new / rs
            for i in range(n):
                p[i] = r[i] + beta * p[i]
            rs = rs_new
        return x, k, np.sqrt(rs) / bnorm, status


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def csr_matvec(row_ptr, col_idx, values, x):
    """y = A @ x for a CSR matrix given by its three arrays."""
    if _BACKEND == "numba":
        return _csr_matvec_numba(row_ptr, col_idx, values, x)
    return _csr_matvec_numpy(row_ptr, col_idx, values, x)


def cg(row_ptr, col_idx, values, b, rel_tol, max_iter):
    """Unpreconditioned CG on a CSR SPD matrix.

    Stops when the (recurrence) residual norm drops below
    ``rel_tol * ||b||`` or after ``max_iter`` iterations.

    Returns ``(x, iterations, final_relative_residual, status)`` with
    status one of the ``CG_*`` codes.
    """
    if _BACKEND == "numba":
        return _cg_numba(row_ptr, col_idx, values, b, rel_tol, max_iter)
    return _cg_numpy(row_ptr, col_idx, values, b, rel_tol, max_iter)


def warmup():
    """Trigger JIT compilation of the numba kernels (no-op on numpy)."""
    if _BACKEND != "numba":
        return
    rp = np.array([0, 1, 2], dtype=np.int64)
    ci = np.array([0, 1], dtype=np.int64)
    vals = np.array([2.0, 2.0])
    b = np.ones(2)
    _csr_matvec_numba(rp, ci, vals, b)
    _cg_numba(rp, ci, vals, b, 1e-12, 10)

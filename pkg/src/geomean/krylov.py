"""The three Krylov methods computing (A#B)v.

All methods touch A and B only through sparse matrix-vector products and
CG solves; they instantiate the pencil M = B^{-1}A without ever forming
it.  The rational Arnoldi decomposition is kept in the pencil form

    A V_{m+1} K_m = B V_{m+1} H_m   (underlined, (m+1) x m blocks)

which reduces to the classical Arnoldi relation for all-infinity poles.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .dense import (
    SymTridiagonal,
    db_sqrt_general,
    mgs_orthogonalize,
    ritz_values,
    small_solve,
    sqrt_spd,
)
from .errors import DimensionMismatchError, NotPositiveDefiniteError
from .poles import INF_POLE, ZERO_POLE, PoleSequence, PoleStrategy, validate_pole
from .solvers import CgConfig, SolveStats, b_norm, cg_solve, solve_spd_pencil
from .sparse import SparseMatrix

__all__ = [
    "KrylovDecomposition",
    "MethodReport",
    "GeomeanConfig",
    "converged",
    "decomposition_residual",
    "gen_lanczos_geomean",
    "arnoldi_geomean",
    "rational_arnoldi_geomean",
]

RITZ_COLLISION_TOL = 1e-12


@dataclass(frozen=True)
class GeomeanConfig:
    """Outer-iteration controls shared by all methods.

    ``outer_tol`` is the successive-approximation stopping tolerance;
    zero disables it so a run executes exactly ``max_steps`` steps
    (benchmark mode).  ``record_steps`` keeps every per-step
    approximation vector in the report.
    """

    max_steps: int = 30
    outer_tol: float = 1e-10
    cg: CgConfig = field(default_factory=CgConfig)
    record_steps: bool = False

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.outer_tol < 0:
            raise ValueError("outer_tol must be >= 0")


@dataclass(frozen=True)
class KrylovDecomposition:
    """Orthonormal basis with the small decomposition matrices.

    ``basis`` has m+1 columns, or m after a happy breakdown.  ``h`` and
    ``k`` are the underlined (m+1) x m blocks; ``k`` is None for the
    purely polynomial methods, where it is implicitly [I; 0].
    """

    basis: np.ndarray
    h: np.ndarray
    k: np.ndarray | None
    poles: PoleSequence
    inner_product: str  # "euclidean" | "b"

    @property
    def steps(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class MethodReport:
    """Per-run record: step timings, optional per-step errors and
    approximations, aggregated inner-solve statistics, and how the run
    terminated ("converged" | "max_steps" | "breakdown")."""

    per_step_approximations: list | None
    per_step_rel_error: list | None
    per_step_seconds: list
    inner_solve_stats: SolveStats
    termination: str
    decomposition: KrylovDecomposition


def converged(prev: np.ndarray, curr: np.ndarray, tol: float) -> bool:
    """Successive-iterate criterion: ||curr - prev|| <= tol * ||curr||."""
    prev = np.asarray(prev, dtype=np.float64)
    curr = np.asarray(curr, dtype=np.float64)
    if prev.shape != curr.shape:
        raise DimensionMismatchError("converged: vectors differ in length")
    return float(np.linalg.norm(curr - prev)) <= tol * float(np.linalg.norm(curr))


def _rel_err(x, ref):
    return float(np.linalg.norm(x - ref) / np.linalg.norm(ref))


def _aggregate(stats):
    if not stats:
        return SolveStats(0, 0.0, True)
    return SolveStats(
        iterations=sum(s.iterations for s in stats),
        final_relative_residual=max(s.final_relative_residual for s in stats),
        converged=all(s.converged for s in stats),
    )


def _check_inputs(a, b, v):
    if a.shape != b.shape or a.n_rows != a.n_cols:
        raise DimensionMismatchError(f"pencil shapes {a.shape} vs {b.shape}")
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != a.n_rows:
        raise DimensionMismatchError("starting vector length mismatch")
    if not np.all(np.isfinite(v)):
        raise ValueError("starting vector has non-finite entries")
    if not np.any(v):
        raise ValueError("starting vector must be non-zero")
    return v


def _finish(result, report_args):
    return result, MethodReport(**report_args)


# --------------------------------------------------------------------------
# generalized Lanczos (B-orthonormal basis, tridiagonal projection)
# --------------------------------------------------------------------------

def gen_lanczos_geomean(a, b, v, cfg=None, reference=None):
    """(A#B)v by the generalized Lanczos method.

    Builds a B-orthonormal basis of the pencil with one CG solve on B
    per step (plus B products for the weighted inner products), collects
    the three-term coefficients into a symmetric tridiagonal T and
    returns B Q T^{1/2} e_1 ||v||_B.  Full two-pass reorthogonalization
    keeps the basis B-orthonormal in floating point; in exact arithmetic
    the extra coefficients vanish.
    """
    if cfg is None:
        cfg = GeomeanConfig()
    v = _check_inputs(a, b, v)
    n = a.n_rows
    m_max = min(cfg.max_steps, n)
    binner = lambda x, y: float(x @ b.matvec(y))

    nv = b_norm(b, v)
    basis = np.zeros((n, m_max + 1))
    basis[:, 0] = v / nv
    alphas: list = []
    betas: list = []
    stats: list = []
    seconds: list = []
    approxs: list = []
    errors: list = []
    prev_approx = None
    result = None
    termination = "max_steps"
    need_steps = cfg.record_steps or reference is not None or cfg.outer_tol > 0
    steps = 0

    for j in range(m_max):
        t0 = time.perf_counter()
        w, st = cg_solve(b, a.matvec(basis[:, j]), cfg.cg)
        stats.append(st)
        h, beta, q_next = mgs_orthogonalize(w, basis[:, : j + 1], inner=binner)
        alphas.append(h[j])
        betas.append(beta)
        steps = j + 1
        broke = q_next is None
        if not broke:
            basis[:, j + 1] = q_next
        last = broke or steps == m_max
        if need_steps or last:
            result = _lanczos_eval(a, b, basis, alphas, betas, steps, nv)
        seconds.append(time.perf_counter() - t0)
        if need_steps:
            if cfg.record_steps:
                approxs.append(result)
            if reference is not None:
                errors.append(_rel_err(result, reference))
        if broke:
            termination = "breakdown"
            break
        if (
            cfg.outer_tol > 0
            and prev_approx is not None
            and converged(prev_approx, result, cfg.outer_tol)
        ):
            termination = "converged"
            break
        prev_approx = result

    k = steps
    hbar = np.zeros((k + 1, k))
    for i in range(k):
        hbar[i, i] = alphas[i]
        hbar[i + 1, i] = betas[i]
        if i + 1 < k:
            hbar[i, i + 1] = betas[i]
    ncols = k if termination == "breakdown" else k + 1
    dec = KrylovDecomposition(
        basis=basis[:, :ncols].copy(),
        h=hbar,
        k=None,
        poles=PoleSequence((INF_POLE,) * k, "genlanczos"),
        inner_product="b",
    )
    return _finish(
        result,
        dict(
            per_step_approximations=approxs if cfg.record_steps else None,
            per_step_rel_error=errors if reference is not None else None,
            per_step_seconds=seconds,
            inner_solve_stats=_aggregate(stats),
            termination=termination,
            decomposition=dec,
        ),
    )


def _lanczos_eval(a, b, basis, alphas, betas, k, nv):
    t = SymTridiagonal(np.array(alphas[:k]), np.array(betas[: k - 1]))
    try:
        th = sqrt_spd(t)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            f"projected tridiagonal lost definiteness at step {k}: {exc}"
        ) from exc
    y = basis[:, :k] @ (th[:, 0] * nv)
    return b.matvec(y)


# --------------------------------------------------------------------------
# polynomial Arnoldi
# --------------------------------------------------------------------------

def arnoldi_geomean(a, b, v, cfg=None, reference=None, use_a_inv_b=False):
    """(A#B)v by the Arnoldi method on the pencil.

    Default: Euclidean-orthonormal Krylov basis of M = B^{-1}A (one A
    product and one CG solve on B per step) and the approximation
    A Q_k H_k^{-1/2} e_1 ||v||_2.  With ``use_a_inv_b`` the space is
    built from A^{-1}B and the exponent flips to +1/2; both variants
    approximate the same quantity.
    """
    if cfg is None:
        cfg = GeomeanConfig()
    v = _check_inputs(a, b, v)
    n = a.n_rows
    m_max = min(cfg.max_steps, n)

    nv = float(np.linalg.norm(v))
    basis = np.zeros((n, m_max + 1))
    basis[:, 0] = v / nv
    hbar = np.zeros((m_max + 1, m_max))
    stats: list = []
    seconds: list = []
    approxs: list = []
    errors: list = []
    prev_approx = None
    result = None
    termination = "max_steps"
    need_steps = cfg.record_steps or reference is not None or cfg.outer_tol > 0
    steps = 0

    for j in range(m_max):
        t0 = time.perf_counter()
        if use_a_inv_b:
            w, st = cg_solve(a, b.matvec(basis[:, j]), cfg.cg)
        else:
            w, st = cg_solve(b, a.matvec(basis[:, j]), cfg.cg)
        stats.append(st)
        h, beta, q_next = mgs_orthogonalize(w, basis[:, : j + 1])
        hbar[: j + 1, j] = h
        hbar[j + 1, j] = beta
        steps = j + 1
        broke = q_next is None
        if not broke:
            basis[:, j + 1] = q_next
        last = broke or steps == m_max
        if need_steps or last:
            result = _arnoldi_eval(a, basis, hbar, steps, nv, use_a_inv_b)
        seconds.append(time.perf_counter() - t0)
        if need_steps:
            if cfg.record_steps:
                approxs.append(result)
            if reference is not None:
                errors.append(_rel_err(result, reference))
        if broke:
            termination = "breakdown"
            break
        if (
            cfg.outer_tol > 0
            and prev_approx is not None
            and converged(prev_approx, result, cfg.outer_tol)
        ):
            termination = "converged"
            break
        prev_approx = result

    k = steps
    ncols = k if termination == "breakdown" else k + 1
    dec = KrylovDecomposition(
        basis=basis[:, :ncols].copy(),
        h=hbar[: k + 1, :k].copy(),
        k=None,
        poles=PoleSequence((INF_POLE,) * k, "poly"),
        inner_product="euclidean",
    )
    return _finish(
        result,
        dict(
            per_step_approximations=approxs if cfg.record_steps else None,
            per_step_rel_error=errors if reference is not None else None,
            per_step_seconds=seconds,
            inner_solve_stats=_aggregate(stats),
            termination=termination,
            decomposition=dec,
        ),
    )


def _arnoldi_eval(a, basis, hbar, k, nv, use_a_inv_b):
    hk = hbar[:k, :k]
    try:
        y_sqrt, z_invsqrt = db_sqrt_general(hk)
    except Exception as exc:
        raise type(exc)(f"projected matrix square root failed at step {k}: {exc}") from exc
    f = y_sqrt if use_a_inv_b else z_invsqrt
    return a.matvec(basis[:, :k] @ (f[:, 0] * nv))


# --------------------------------------------------------------------------
# rational Arnoldi
# --------------------------------------------------------------------------

def rational_arnoldi_geomean(a, b, v, strategy, cfg=None, reference=None):
    """(A#B)v by the rational Arnoldi method with pluggable poles.

    Per step the pole dispatches to one sparse SPD solve: B x = A v_j
    for an infinity pole, A x = B v_j for a zero pole, and the shifted
    pencil otherwise.  Finite poles use whichever of the two equivalent
    shifted systems

        (B - A/xi) x = A v_j        (|xi| at or above the Ritz scale)
        (A - xi B) w = B v_j        (|xi| below it; the basis direction
                                     is extracted from xi*w directly)

    keeps the new basis direction free of cancellation; the two produce
    the same decomposition up to a per-column scaling that H_m K_m^{-1}
    is invariant to.  The approximation is
    A V_m (H_m K_m^{-1})^{-1/2} e_1 ||v||_2.
    """
    if cfg is None:
        cfg = GeomeanConfig()
    if not isinstance(strategy, PoleStrategy):
        raise TypeError("strategy must be a PoleStrategy")
    v = _check_inputs(a, b, v)
    n = a.n_rows
    m_max = min(cfg.max_steps, n)

    nv = float(np.linalg.norm(v))
    basis = np.zeros((n, m_max + 1))
    basis[:, 0] = v / nv
    hbar = np.zeros((m_max + 1, m_max))
    kbar = np.zeros((m_max + 1, m_max))
    used_poles: list = []
    stats: list = []
    seconds: list = []
    approxs: list = []
    errors: list = []
    ritz = None
    prev_approx = None
    result = None
    am = None
    termination = "max_steps"
    need_steps = cfg.record_steps or reference is not None or cfg.outer_tol > 0
    steps = 0

    for j in range(m_max):
        t0 = time.perf_counter()
        xi = _next_pole(strategy, j, ritz)
        used_poles.append(xi)
        q = basis[:, j]
        broke = False

        if xi == INF_POLE:
            x, st = cg_solve(b, a.matvec(q), cfg.cg)
            stats.append(st)
            h, beta, q_next = mgs_orthogonalize(x, basis[:, : j + 1])
            hbar[: j + 1, j] = h
            hbar[j + 1, j] = beta
            kbar[j, j] = 1.0
        elif xi == ZERO_POLE:
            x, st = cg_solve(a, b.matvec(q), cfg.cg)
            stats.append(st)
            h, beta, q_next = mgs_orthogonalize(x, basis[:, : j + 1])
            kbar[: j + 1, j] = h
            kbar[j + 1, j] = beta
            hbar[j, j] = 1.0
        else:
            scale = _pencil_scale(a, b, q, ritz)
            if abs(xi) >= scale:
                x, st = solve_spd_pencil(-1.0 / xi, a, 1.0, b, a.matvec(q), cfg.cg)
                stats.append(st)
                h, beta, q_next = mgs_orthogonalize(x, basis[:, : j + 1])
                hbar[: j + 1, j] = h
                hbar[j + 1, j] = beta
                kbar[: j + 2, j] = hbar[: j + 2, j] / xi
                kbar[j, j] += 1.0
            else:
                w, st = solve_spd_pencil(1.0, a, -xi, b, b.matvec(q), cfg.cg)
                stats.append(st)
                g, beta, q_next = mgs_orthogonalize(xi * w, basis[:, : j + 1])
                hbar[: j + 1, j] = g
                hbar[j + 1, j] = beta
                hbar[j, j] += 1.0
                kbar[: j + 1, j] = g / xi
                kbar[j + 1, j] = beta / xi

        steps = j + 1
        broke = q_next is None
        if not broke:
            basis[:, j + 1] = q_next
        am = _projected(hbar, kbar, steps)
        last = broke or steps == m_max
        if need_steps or last:
            result = _rational_eval(a, basis, am, steps, nv)
        if not last:
            ritz = ritz_values(am)
        seconds.append(time.perf_counter() - t0)
        if need_steps:
            if cfg.record_steps:
                approxs.append(result)
            if reference is not None:
                errors.append(_rel_err(result, reference))
        if broke:
            termination = "breakdown"
            break
        if (
            cfg.outer_tol > 0
            and prev_approx is not None
            and converged(prev_approx, result, cfg.outer_tol)
        ):
            termination = "converged"
            break
        prev_approx = result

    k = steps
    ncols = k if termination == "breakdown" else k + 1
    dec = KrylovDecomposition(
        basis=basis[:, :ncols].copy(),
        h=hbar[: k + 1, :k].copy(),
        k=kbar[: k + 1, :k].copy(),
        poles=PoleSequence(tuple(used_poles), strategy.name),
        inner_product="euclidean",
    )
    return _finish(
        result,
        dict(
            per_step_approximations=approxs if cfg.record_steps else None,
            per_step_rel_error=errors if reference is not None else None,
            per_step_seconds=seconds,
            inner_solve_stats=_aggregate(stats),
            termination=termination,
            decomposition=dec,
        ),
    )


def _next_pole(strategy, step, ritz):
    """Pull a pole, resampling if it collides with a Ritz value."""
    xi = validate_pole(strategy.next_pole(step, ritz))
    if ritz is None or not math.isfinite(xi):
        return xi
    guards = np.abs(np.atleast_1d(ritz))
    for _ in range(3):
        if not np.any(np.abs(xi - guards) <= RITZ_COLLISION_TOL * np.maximum(guards, 1e-300)):
            return xi
        xi = validate_pole(strategy.resample(step, ritz, xi))
    return xi


def _pencil_scale(a, b, q, ritz):
    """Spectral scale separating the two shifted-system formulations."""
    if ritz is not None and len(np.atleast_1d(ritz)):
        r = np.abs(np.real(np.atleast_1d(ritz)))
        r = r[r > 0]
        if r.size:
            return float(np.sqrt(r.min() * r.max()))
    num = float(q @ a.matvec(q))
    den = float(q @ b.matvec(q))
    return num / den if den > 0 and num > 0 else 1.0


def _projected(hbar, kbar, m):
    """A_m = H_m K_m^{-1} from the leading m x m blocks."""
    hm = hbar[:m, :m]
    km = kbar[:m, :m]
    return small_solve(km.T, hm.T).T


def _rational_eval(a, basis, am, m, nv):
    try:
        _, z_invsqrt = db_sqrt_general(am)
    except Exception as exc:
        raise type(exc)(f"projected matrix square root failed at step {m}: {exc}") from exc
    return a.matvec(basis[:, :m] @ (z_invsqrt[:, 0] * nv))


# --------------------------------------------------------------------------
# decomposition residual
# --------------------------------------------------------------------------

def decomposition_residual(dec: KrylovDecomposition, a: SparseMatrix, b: SparseMatrix) -> float:
    """Relative pencil-form decomposition residual.

    Rational case: ||A V K - B V H||_F / (||A||_F ||V||_2) on the
    underlined blocks.  The polynomial and Lanczos cases use the
    implicit K = [I; 0], which reduces to the classical Arnoldi
    relation residual in pencil form.
    """
    vb = dec.basis
    m = dec.steps
    hb = dec.h
    kb = dec.k
    if kb is None:
        kb = np.zeros((m + 1, m))
        kb[:m, :m] = np.eye(m)
    if vb.shape[1] == m:  # breakdown: the (m+1)-th basis vector was never formed
        vb = np.hstack([vb, np.zeros((vb.shape[0], 1))])
    vk = vb @ kb
    vh = vb @ hb
    avk = np.column_stack([a.matvec(vk[:, i]) for i in range(m)])
    bvh = np.column_stack([b.matvec(vh[:, i]) for i in range(m)])
    a_scale = float(np.linalg.norm(a.values))
    v_scale = float(np.linalg.norm(vb, 2))
    return float(np.linalg.norm(avk - bvh) / (a_scale * v_scale))

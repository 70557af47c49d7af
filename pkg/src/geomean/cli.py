"""Command-line harness: problem generation, convergence runs, timing
benchmarks, and a dense oracle on files.

Commands run single-threaded by default (BLAS pools are limited per
command so timings are meaningful); ``bench --parallel`` distributes
independent (method, size) cells over processes, each cell internally
single-threaded.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import kernels
from .baselines import dense_geomean, gauss_chebyshev_geomean, relative_error
from .krylov import (
    GeomeanConfig,
    arnoldi_geomean,
    gen_lanczos_geomean,
    rational_arnoldi_geomean,
)
from .poles import make_strategy
from .solvers import CgConfig, extreme_pencil_eigs
from .sparse import (
    SparseMatrix,
    dense_guard,
    lap1d,
    lap2d,
    random_spd,
    read_matrix_market,
    write_matrix_market,
)

METHODS = (
    "genlanczos",
    "arnoldi",
    "rat-poly",
    "rat-extended",
    "rat-leja",
    "rat-adaptive",
    "quadrature",
    "dense",
)

REFERENCE_DENSE_LIMIT = 2000
EIG_TOL = 1e-3


def _limit_threads():
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=1)


def _read_vector(path):
    with open(path) as fh:
        vals = [float(line) for line in fh if line.strip()]
    return np.array(vals, dtype=np.float64)


def _write_vector(vec, path):
    with open(path, "w") as fh:
        for x in vec:
            fh.write(format(float(x), ".17g") + "\n")


def _fmt(x):
    x = float(x)
    if not np.isfinite(x) or x < 0:
        raise ValueError(f"refusing to emit non-finite/negative value {x!r}")
    return format(x, ".17g")


# --------------------------------------------------------------------------
# problem construction
# --------------------------------------------------------------------------

def _lap_pencil(size):
    k = int(round(np.sqrt(size)))
    if k * k != size:
        raise ValueError(f"lap pencil needs a perfect-square size, got {size}")
    return lap1d(size), lap2d(k)


def _random_pencil(size, seed):
    a = random_spd(size, seed)
    b = random_spd(size, seed + 1)
    v = np.random.default_rng(seed + 2).standard_normal(size)
    return a, b, v


def _load_files(a_path, b_path, v_path):
    a = read_matrix_market(a_path)
    b = read_matrix_market(b_path)
    v = _read_vector(v_path)
    if a.shape != b.shape or a.n_rows != len(v):
        raise ValueError(
            f"dimension mismatch: A {a.shape}, B {b.shape}, v length {len(v)}"
        )
    return a, b, v


# --------------------------------------------------------------------------
# method drivers
# --------------------------------------------------------------------------

def _krylov_call(method, a, b, v, cfg, reference=None):
    """Run one Krylov method; pole setup happens inside (and is timed by
    callers that wrap this function)."""
    if method == "genlanczos":
        return gen_lanczos_geomean(a, b, v, cfg, reference)
    if method == "arnoldi":
        return arnoldi_geomean(a, b, v, cfg, reference)
    if method.startswith("rat-"):
        name = method[4:]
        bounds = extreme_pencil_eigs(a, b, EIG_TOL) if name == "leja" else None
        strategy = make_strategy(name, max_steps=cfg.max_steps, bounds=bounds)
        return rational_arnoldi_geomean(a, b, v, strategy, cfg, reference)
    raise ValueError(f"unknown Krylov method {method!r}")


def _bench_cell(method, a, b, v, steps, cg_tol):
    """One benchmark cell: full method call, wall-clock around everything
    the method needs (pole setup and eigenvalue estimation included)."""
    cfg = GeomeanConfig(
        max_steps=steps, outer_tol=0.0, cg=CgConfig(rel_tol=cg_tol), record_steps=False
    )
    t0 = time.perf_counter()
    if method == "dense":
        result = dense_geomean(a, b) @ v
    elif method == "quadrature":
        bounds = extreme_pencil_eigs(a, b, EIG_TOL)
        result = gauss_chebyshev_geomean(a, b, v, steps, bounds, cfg.cg)
    else:
        result, _ = _krylov_call(method, a, b, v, cfg)
    return result, time.perf_counter() - t0


def _bench_cell_worker(args):
    method, size, steps, cg_tol = args
    with _limit_threads():
        kernels.warmup()
        a, b = _lap_pencil(size)
        v = np.ones(size)
        result, seconds = _bench_cell(method, a, b, v, steps, cg_tol)
    return method, size, seconds, result


def _reference_for(a, b, v, steps, cg_tol):
    """Reference vector: dense oracle when allowed, else the tightest
    Krylov method at twice the steps.  Returns (vector, comment|None)."""
    n = a.n_rows
    if n <= min(REFERENCE_DENSE_LIMIT, dense_guard()):
        return dense_geomean(a, b) @ v, None
    cfg = GeomeanConfig(
        max_steps=2 * steps, outer_tol=0.0, cg=CgConfig(rel_tol=cg_tol)
    )
    ref, _ = _krylov_call("rat-adaptive", a, b, v, cfg)
    return ref, f"reference: rat-adaptive at {2 * steps} steps (dense guard exceeded)"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_gen(kind, size, seed, out):
    """Write one generated matrix as a Matrix Market file."""
    if kind == "lap1d":
        m = lap1d(size)
    elif kind == "lap2d":
        m = lap2d(size)
    elif kind == "random-spd":
        m = random_spd(size, seed)
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    write_matrix_market(m, out)
    return out


def cmd_run(method, a, b, v, steps, seed, cg_tol, outer_tol, out):
    """Convergence run: per-step relative error and cumulative seconds.

    Writes CSV with header ``step,rel_error,seconds_cumulative``; the
    reference is the dense oracle for moderate sizes and a flagged
    surrogate beyond them.  Deterministic for a fixed problem and seed,
    wall-clock column aside.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    with _limit_threads():
        kernels.warmup()
        reference, comment = _reference_for(a, b, v, steps, cg_tol)
        rows = []
        if method == "dense":
            t0 = time.perf_counter()
            result = dense_geomean(a, b) @ v
            dt = time.perf_counter() - t0
            rows.append((1, relative_error(result, reference), dt))
        elif method == "quadrature":
            t0 = time.perf_counter()
            bounds = extreme_pencil_eigs(a, b, EIG_TOL)
            cumulative = time.perf_counter() - t0
            for count in range(1, steps + 1):
                t0 = time.perf_counter()
                result = gauss_chebyshev_geomean(
                    a, b, v, count, bounds, CgConfig(rel_tol=cg_tol)
                )
                cumulative += time.perf_counter() - t0
                rows.append((count, relative_error(result, reference), cumulative))
        else:
            cfg = GeomeanConfig(
                max_steps=steps,
                outer_tol=outer_tol,
                cg=CgConfig(rel_tol=cg_tol),
                record_steps=False,
            )
            t0 = time.perf_counter()
            _, report = _krylov_call(method, a, b, v, cfg, reference=reference)
            setup = (time.perf_counter() - t0) - sum(report.per_step_seconds)
            cumulative = max(setup, 0.0)
            for i, (err, dt) in enumerate(
                zip(report.per_step_rel_error, report.per_step_seconds), start=1
            ):
                cumulative += dt
                rows.append((i, err, cumulative))
    with open(out, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("step,rel_error,seconds_cumulative\n")
        for step, err, sec in rows:
            fh.write(f"{step},{_fmt(err)},{sec:.9f}\n")
    return out


def cmd_bench(sizes, methods, steps, cg_tol, out, parallel=False):
    """Timing benchmark over a (method, size) grid.

    A = lap1d(size), B = lap2d(sqrt(size)), v = all ones; wall-clock is
    measured around the full method call including pole setup and
    eigenvalue estimation.  The dense and quadrature rows are stand-ins
    for the direct dense and contour-integral competitors.
    """
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    cells = [(m, s, steps, cg_tol) for s in sizes for m in methods]
    results = {}
    if parallel:
        with ProcessPoolExecutor() as pool:
            for method, size, seconds, result in pool.map(_bench_cell_worker, cells):
                results[(method, size)] = (seconds, result)
    else:
        with _limit_threads():
            kernels.warmup()
            for size in sizes:
                a, b = _lap_pencil(size)
                v = np.ones(size)
                for method in methods:
                    result, seconds = _bench_cell(method, a, b, v, steps, cg_tol)
                    results[(method, size)] = (seconds, result)
    rows = []
    with _limit_threads():
        for size in sizes:
            a, b = _lap_pencil(size)
            v = np.ones(size)
            reference, _ = _reference_for(a, b, v, steps, cg_tol)
            for method in methods:
                seconds, result = results[(method, size)]
                rows.append(
                    (method, size, seconds, relative_error(result, reference), steps)
                )
    with open(out, "w") as fh:
        fh.write("method,dimension,seconds,rel_error_final,steps\n")
        for method, size, seconds, err, nsteps in rows:
            fh.write(f"{method},{size},{seconds:.9f},{_fmt(err)},{nsteps}\n")
    return out


def cmd_oracle(a_path, b_path, v_path, out):
    """Write dense_geomean(A, B) @ v, one value per line, 17 digits."""
    a, b, v = _load_files(a_path, b_path, v_path)
    if not (a.symmetric and b.symmetric):
        raise ValueError("oracle inputs must be symmetric-flagged matrices")
    with _limit_threads():
        result = dense_geomean(a, b) @ v
    _write_vector(result, out)
    return out


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _build_parser():
    p = argparse.ArgumentParser(
        prog="geomean",
        description="Krylov methods for the geometric mean of two sparse "
        "SPD matrices times a vector",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a test matrix (Matrix Market)")
    g.add_argument("kind", choices=("lap1d", "lap2d", "random-spd"))
    g.add_argument("size", type=int, help="dimension (grid side for lap2d)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="convergence run, CSV of per-step errors")
    r.add_argument("files", nargs="*", help="optional A.mtx B.mtx v.txt")
    r.add_argument("--method", required=True, choices=METHODS + ("rational",))
    r.add_argument("--poles", default=None, help="pole strategy for --method rational")
    r.add_argument("--problem", choices=("random", "lap"), default="random")
    r.add_argument("--size", type=int, default=100)
    r.add_argument("--steps", type=int, default=30)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--tol", type=float, default=0.0, help="outer tolerance (0 = fixed steps)")
    r.add_argument("--cg-tol", type=float, default=1e-12)
    r.add_argument("--out", required=True)

    bench = sub.add_parser("bench", help="timing benchmark, CSV of seconds per cell")
    bench.add_argument("--sizes", default="1600,2500", help="comma-separated dimensions")
    bench.add_argument(
        "--methods", default="rat-leja,rat-adaptive,dense,quadrature",
        help="comma-separated method names",
    )
    bench.add_argument("--steps", type=int, default=30)
    bench.add_argument("--cg-tol", type=float, default=1e-12)
    bench.add_argument("--out", required=True)
    bench.add_argument("--parallel", action="store_true")

    o = sub.add_parser("oracle", help="dense reference (A#B)v on files")
    o.add_argument("a_path")
    o.add_argument("b_path")
    o.add_argument("v_path")
    o.add_argument("--out", required=True)
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "gen":
        cmd_gen(args.kind, args.size, args.seed, args.out)
    elif args.command == "run":
        method = args.method
        if method == "rational":
            if args.poles is None:
                raise SystemExit("--method rational requires --poles")
            method = f"rat-{args.poles}"
        if args.files:
            if len(args.files) != 3:
                raise SystemExit("run with files needs exactly: A.mtx B.mtx v.txt")
            a, b, v = _load_files(*args.files)
        elif args.problem == "lap":
            a, b = _lap_pencil(args.size)
            v = np.ones(args.size)
        else:
            a, b, v = _random_pencil(args.size, args.seed)
        cmd_run(method, a, b, v, args.steps, args.seed, args.cg_tol, args.tol, args.out)
    elif args.command == "bench":
        sizes = [int(s) for s in args.sizes.split(",") if s]
        methods = [m for m in args.methods.split(",") if m]
        cmd_bench(sizes, methods, args.steps, args.cg_tol, args.out, args.parallel)
    elif args.command == "oracle":
        cmd_oracle(args.a_path, args.b_path, args.v_path, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Krylov subspace methods for the geometric mean of two sparse SPD
matrices applied to a vector, (A#B)v.

The matrices are touched only through sparse matrix-vector products and
conjugate-gradient solves; polynomial and rational Krylov variants are
provided together with a dense spectral oracle and a Gauss-Chebyshev
quadrature baseline.
"""

from .baselines import (
    QuadratureRule,
    dense_geomean,
    gauss_chebyshev_geomean,
    gauss_chebyshev_rule,
    relative_error,
)
from .dense import (
    SymTridiagonal,
    db_sqrt_general,
    invsqrt_spd,
    mgs_orthogonalize,
    ritz_values,
    small_solve,
    sqrt_spd,
    sym_eig,
)
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    GeomeanError,
    MatrixFormatError,
    NotPositiveDefiniteError,
    SingularMatrixError,
)
from .kernels import get_backend, set_backend
from .krylov import (
    GeomeanConfig,
    KrylovDecomposition,
    MethodReport,
    arnoldi_geomean,
    converged,
    decomposition_residual,
    gen_lanczos_geomean,
    rational_arnoldi_geomean,
)
from .poles import (
    AdaptivePoles,
    CondenserGrid,
    ExtendedPoles,
    LejaPoles,
    PoleSequence,
    PolynomialPoles,
    adaptive_next_pole,
    first_adaptive_pole,
    leja_sequence,
    make_strategy,
    poles_extended,
    poles_polynomial,
)
from .solvers import (
    CgConfig,
    PencilSpectrumBounds,
    SolveStats,
    b_inner,
    b_norm,
    cg_solve,
    extreme_pencil_eigs,
    solve_spd_pencil,
)
from .sparse import (
    SparseMatrix,
    identity,
    lap1d,
    lap2d,
    matvec,
    pencil_combine,
    random_spd,
    read_matrix_market,
    write_matrix_market,
)

__version__ = "0.1.0"

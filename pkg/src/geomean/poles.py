"""Pole sequence strategies for the rational Arnoldi method.

Poles live on the extended real line and are represented as plain
floats: ``math.inf`` is the polynomial step, ``0.0`` the inverted step,
and finite poles are strictly negative reals.  Strategies are selected
by name ("poly" | "extended" | "leja" | "adaptive") and are pulled one
pole at a time by the Krylov driver, which passes in the current Ritz
values.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .solvers import PencilSpectrumBounds

__all__ = [
    "INF_POLE",
    "ZERO_POLE",
    "validate_pole",
    "PoleSequence",
    "CondenserGrid",
    "poles_polynomial",
    "poles_extended",
    "leja_sequence",
    "adaptive_next_pole",
    "first_adaptive_pole",
    "PoleStrategy",
    "PolynomialPoles",
    "ExtendedPoles",
    "LejaPoles",
    "AdaptivePoles",
    "make_strategy",
    "STRATEGY_NAMES",
]

INF_POLE = math.inf
ZERO_POLE = 0.0

RANGE_FACTOR = 1e8
GRID_POINTS = 1000
SKIP_TOL = 1e-12


def validate_pole(xi: float) -> float:
    """Check that xi is inf, 0, or a strictly negative finite real."""
    xi = float(xi)
    if math.isnan(xi) or xi == -math.inf:
        raise ValueError(f"invalid pole {xi!r}")
    if math.isfinite(xi) and xi > 0.0:
        raise ValueError(f"finite poles must be strictly negative, got {xi!r}")
    return xi


@dataclass(frozen=True)
class PoleSequence:
    """Ordered poles plus the strategy that generated them.

    ``sigma_nodes`` carries the Leja nodes when the sequence came from
    the generalized-Leja construction.
    """

    poles: tuple
    strategy_name: str
    sigma_nodes: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(validate_pole(p) for p in self.poles))
        if self.sigma_nodes is not None:
            object.__setattr__(
                self, "sigma_nodes", tuple(float(s) for s in self.sigma_nodes)
            )

    def __len__(self):
        return len(self.poles)

    def __getitem__(self, i):
        return self.poles[i]


@dataclass(frozen=True)
class CondenserGrid:
    """Discretized condenser: node candidates on the spectral interval,
    pole candidates on the negative axis (log spaced, sorted ascending)."""

    sigma_candidates: np.ndarray
    xi_candidates: np.ndarray

    def __post_init__(self):
        sig = np.asarray(self.sigma_candidates, dtype=np.float64)
        xi = np.asarray(self.xi_candidates, dtype=np.float64)
        if sig.size == 0 or xi.size == 0:
            raise ValueError("candidate sets must be non-empty")
        if np.any(np.diff(sig) < 0) or np.any(np.diff(xi) < 0):
            raise ValueError("candidate sets must be sorted ascending")
        if np.any(xi >= 0.0):
            raise ValueError("xi candidates must be strictly negative")
        object.__setattr__(self, "sigma_candidates", sig)
        object.__setattr__(self, "xi_candidates", xi)

    @classmethod
    def from_bounds(
        cls,
        bounds: PencilSpectrumBounds,
        n_sigma: int = GRID_POINTS,
        n_xi: int = GRID_POINTS,
        range_factor: float = RANGE_FACTOR,
    ) -> "CondenserGrid":
        lmin, lmax = bounds.lambda_min, bounds.lambda_max
        # Chebyshev-distributed nodes including both endpoints
        theta = np.linspace(0.0, np.pi, n_sigma)
        sigma = lmin + (lmax - lmin) * 0.5 * (1.0 - np.cos(theta))
        xi = -np.logspace(
            np.log10(range_factor * lmax), np.log10(lmin / range_factor), n_xi
        )
        return cls(sigma, xi)


def poles_polynomial(m: int) -> PoleSequence:
    """m poles at infinity (polynomial Krylov space)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return PoleSequence((INF_POLE,) * m, "poly")


def poles_extended(m: int, start_with_inf: bool = True) -> PoleSequence:
    """Alternating infinity/zero poles (extended Krylov space).

    Starts with an infinity step so the first operation needs no A-solve;
    ``start_with_inf=False`` selects the opposite phase.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    pair = (INF_POLE, ZERO_POLE) if start_with_inf else (ZERO_POLE, INF_POLE)
    return PoleSequence(tuple(pair[j % 2] for j in range(m)), "extended")


def _log_factors(z, sigma, xi):
    """log |s(z)| = sum log|z - sigma_k| - sum over finite poles log|1 - z/xi_k|.

    A pole at zero contributes a denominator factor proportional to z,
    i.e. log|z| up to an additive constant irrelevant to arg-extrema.
    """
    with np.errstate(divide="ignore"):
        s = np.zeros_like(z)
        for sg in sigma:
            s += np.log(np.abs(z - sg))
        for p in xi:
            if p == INF_POLE:
                continue
            if p == ZERO_POLE:
                s -= np.log(np.abs(z))
            else:
                s -= np.log(np.abs(1.0 - z / p))
    return s


def leja_sequence(
    bounds: PencilSpectrumBounds, m: int, grid: CondenserGrid | None = None
) -> PoleSequence:
    """Greedy generalized-Leja nodes and poles over the condenser grids.

    sigma_1 is lambda_min (the point of the spectral interval closest to
    the pole set); the degenerate xi_1 = 0 of the minimum-distance rule
    is replaced by the negative candidate closest to zero.  All products
    are accumulated as running log-magnitude sums, updated incrementally
    in O(grid) per step.  Deterministic given (bounds, grid).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if grid is None:
        grid = CondenserGrid.from_bounds(bounds)
    sig = grid.sigma_candidates
    xi = grid.xi_candidates
    nodes = [float(bounds.lambda_min)]
    poles = [float(xi[-1])]
    with np.errstate(divide="ignore"):
        table_sigma = np.log(np.abs(sig - nodes[0])) - np.log(np.abs(1.0 - sig / poles[0]))
        table_xi = np.log(np.abs(xi - nodes[0])) - np.log(np.abs(1.0 - xi / poles[0]))
        for _ in range(m - 1):
            s_new = float(sig[np.argmax(table_sigma)])
            x_new = float(xi[np.argmin(table_xi)])
            nodes.append(s_new)
            poles.append(x_new)
            table_sigma += np.log(np.abs(sig - s_new)) - np.log(np.abs(1.0 - sig / x_new))
            table_xi += np.log(np.abs(xi - s_new)) - np.log(np.abs(1.0 - xi / x_new))
    return PoleSequence(tuple(poles), "leja", sigma_nodes=tuple(nodes))


def adaptive_next_pole(ritz, poles_so_far, grid: CondenserGrid) -> float:
    """Next adaptive pole: argmin over xi candidates of |s_m(z)| with the
    Ritz values as nodes and the previously used poles as denominator.

    Candidates within relative SKIP_TOL of a Ritz value or a previous
    pole are skipped (log singularity); ties break toward the candidate
    of smallest magnitude.  If every candidate is degenerate the midpoint
    candidate is returned with a warning.
    """
    z = grid.xi_candidates
    sigma = np.atleast_1d(np.asarray(ritz, dtype=np.float64))
    prev = [p for p in _pole_list(poles_so_far) if p not in (INF_POLE,)]
    s = _log_factors(z, sigma, prev)
    degenerate = ~np.isfinite(s)
    for ref in list(sigma) + [p for p in prev if p != ZERO_POLE]:
        degenerate |= np.abs(z - ref) <= SKIP_TOL * max(abs(ref), 1e-300)
    if degenerate.all():
        warnings.warn("adaptive_next_pole: all candidates degenerate, using midpoint")
        return float(z[z.shape[0] // 2])
    s = np.where(degenerate, np.inf, s)
    vmin = s.min()
    tied = s <= vmin + SKIP_TOL * max(1.0, abs(vmin))
    cand = z[tied]
    return float(cand[np.argmin(np.abs(cand))])


def first_adaptive_pole(grid: CondenserGrid) -> float:
    """The adaptive strategy opens with an infinity step: Ritz values only
    exist after one completed step."""
    if grid.xi_candidates.size == 0:
        raise ValueError("empty grid")
    return INF_POLE


def _pole_list(poles):
    if isinstance(poles, PoleSequence):
        return list(poles.poles)
    return [float(p) for p in poles]


# --------------------------------------------------------------------------
# strategies (pull interface driven by the Krylov module)
# --------------------------------------------------------------------------

class PoleStrategy:
    """Produces one pole per step; adaptive variants read the Ritz values.

    A strategy instance is used by a single run at a time.
    """

    name = "?"

    def next_pole(self, step: int, ritz=None) -> float:
        raise NotImplementedError

    def resample(self, step: int, ritz, bad_pole: float) -> float:
        """Fallback when a pole collides with a Ritz value: nudge it."""
        if math.isfinite(bad_pole) and bad_pole != 0.0:
            return bad_pole * (1.0 + 1e-9)
        return bad_pole


class PolynomialPoles(PoleStrategy):
    name = "poly"

    def next_pole(self, step, ritz=None):
        return INF_POLE


class ExtendedPoles(PoleStrategy):
    name = "extended"

    def __init__(self, start_with_inf=True):
        self._phase = 0 if start_with_inf else 1

    def next_pole(self, step, ritz=None):
        return INF_POLE if (step + self._phase) % 2 == 0 else ZERO_POLE


class LejaPoles(PoleStrategy):
    """Plays back a precomputed generalized-Leja sequence."""

    name = "leja"

    def __init__(self, sequence: PoleSequence):
        self.sequence = sequence

    def next_pole(self, step, ritz=None):
        if step >= len(self.sequence):
            raise IndexError(
                f"Leja sequence exhausted at step {step} (length {len(self.sequence)})"
            )
        return self.sequence[step]


class AdaptivePoles(PoleStrategy):
    """Black-box adaptive poles.

    No spectral information is required up front: the candidate grid is
    rebuilt each step from the current Ritz values.  Imaginary parts are
    discarded; components above 1e-6 of the spectral scale draw a
    warning.
    """

    name = "adaptive"

    def __init__(self, grid: CondenserGrid | None = None):
        self.grid = grid
        self.emitted: list = []

    def _ritz_real(self, ritz):
        r = np.atleast_1d(np.asarray(ritz))
        if np.iscomplexobj(r):
            scale = float(np.abs(r.real).max())
            if scale > 0 and float(np.abs(r.imag).max()) > 1e-6 * scale:
                warnings.warn(
                    "adaptive poles: Ritz values have non-negligible imaginary parts"
                )
            r = r.real
        return np.abs(r)

    def next_pole(self, step, ritz=None):
        if step == 0 or ritz is None or len(np.atleast_1d(ritz)) == 0:
            pole = first_adaptive_pole(self.grid) if self.grid is not None else INF_POLE
            self.emitted.append(pole)
            return pole
        r = self._ritz_real(ritz)
        grid = self.grid
        if grid is None:
            rmin = max(float(r.min()), 1e-300)
            rmax = max(float(r.max()), rmin)
            grid = CondenserGrid.from_bounds(
                PencilSpectrumBounds(rmin, rmax, rel_tol_achieved=0.0)
            )
        pole = adaptive_next_pole(r, self.emitted, grid)
        self.emitted.append(pole)
        return pole

    def resample(self, step, ritz, bad_pole):
        if self.emitted and self.emitted[-1] == bad_pole:
            self.emitted.pop()
        r = self._ritz_real(ritz) if ritz is not None else np.array([1.0])
        grid = self.grid
        if grid is None:
            rmin = max(float(r.min()), 1e-300)
            grid = CondenserGrid.from_bounds(
                PencilSpectrumBounds(rmin, max(float(r.max()), rmin), 0.0)
            )
        mask = np.abs(grid.xi_candidates - bad_pole) > SKIP_TOL * abs(bad_pole)
        grid = CondenserGrid(grid.sigma_candidates, grid.xi_candidates[mask])
        pole = adaptive_next_pole(r, self.emitted, grid)
        self.emitted.append(pole)
        return pole


STRATEGY_NAMES = ("poly", "extended", "leja", "adaptive")


def make_strategy(
    name: str,
    max_steps: int = 30,
    bounds: PencilSpectrumBounds | None = None,
    grid: CondenserGrid | None = None,
) -> PoleStrategy:
    """Build a strategy by its CLI name.

    "leja" requires spectral ``bounds`` (the grid is derived from them
    when not given); the other strategies need no spectral information.
    """
    if name == "poly":
        return PolynomialPoles()
    if name == "extended":
        return ExtendedPoles()
    if name == "leja":
        if bounds is None:
            raise ValueError("leja strategy requires pencil spectrum bounds")
        return LejaPoles(leja_sequence(bounds, max_steps, grid))
    if name == "adaptive":
        return AdaptivePoles(grid)
    raise ValueError(f"unknown pole strategy {name!r}; choose from {STRATEGY_NAMES}")

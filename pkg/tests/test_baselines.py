import numpy as np
import pytest

from geomean import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    PencilSpectrumBounds,
    SparseMatrix,
    dense_geomean,
    gauss_chebyshev_geomean,
    gauss_chebyshev_rule,
    identity,
    random_spd,
    relative_error,
    sqrt_spd,
)

from conftest import conditioned_pair


def markov_invsqrt_trapezoid(z, points=1_000_000, cutoff=1e4):
    """Brute-force oracle for z^{-1/2} = (1/pi) * int_{-inf}^0 dx / ((z-x) sqrt(-x)).

    Substituting x = -t^2 gives (2/pi) * int_0^inf dt / (z + t^2); the
    tail beyond t = cutoff is integrated after the further substitution
    s = 1/t, so both pieces are smooth trapezoid integrands.
    """
    half = points // 2
    t = np.linspace(0.0, cutoff, half)
    head = np.trapezoid(1.0 / (z + t * t), t)
    s = np.linspace(1e-12 / cutoff, 1.0 / cutoff, half)
    tail = np.trapezoid(1.0 / (1.0 + z * s * s), s)
    return (2.0 / np.pi) * (head + tail)


class TestMarkovIdentityOracle:
    @pytest.mark.parametrize("z", [0.25, 1.0, 4.0, 10.0])
    def test_integral_representation_of_invsqrt(self, z):
        assert markov_invsqrt_trapezoid(z) == pytest.approx(z**-0.5, abs=1e-8)


class TestQuadratureRule:
    def test_nodes_symmetric_and_count(self):
        rule = gauss_chebyshev_rule(8, PencilSpectrumBounds(1.0, 4.0, 0.0))
        assert rule.count == 8
        assert np.allclose(np.sort(rule.nodes), np.sort(-rule.nodes))
        assert rule.scale == pytest.approx(4.0**0.25)

    def test_rejects_bad_count(self):
        with pytest.raises(ValueError):
            gauss_chebyshev_rule(0, PencilSpectrumBounds(1.0, 4.0, 0.0))


class TestDenseGeomean:
    def test_scalar(self):
        g = dense_geomean(np.array([[4.0]]), np.array([[9.0]]))
        assert g[0, 0] == pytest.approx(6.0)

    def test_identity_left(self):
        b = random_spd(12, 0)
        g = dense_geomean(identity(12), b)
        assert np.allclose(g, sqrt_spd(b.to_dense()), atol=1e-10)

    def test_commuting_diagonals(self):
        g = dense_geomean(np.diag([1.0, 4.0]), np.diag([9.0, 16.0]))
        assert np.allclose(g, np.diag([3.0, 8.0]))

    def test_argument_symmetry(self):
        rng = np.random.default_rng(1)
        for seed in range(5):
            n = int(rng.integers(2, 65))
            a = random_spd(n, seed).to_dense()
            b = random_spd(n, seed + 50).to_dense()
            gab = dense_geomean(a, b)
            gba = dense_geomean(b, a)
            assert np.linalg.norm(gab - gba) <= 1e-9 * np.linalg.norm(gab)

    def test_positive_definite_result(self):
        a, b = conditioned_pair(40, seed=2, cond=1e3)
        g = dense_geomean(a, b)
        assert np.linalg.eigvalsh(g).min() > 0.0

    def test_riccati_property(self):
        # G A^{-1} G = B characterizes the geometric mean
        for seed in (3, 4):
            a, b = conditioned_pair(30, seed=seed, cond=300.0)
            ad, bd = a.to_dense(), b.to_dense()
            g = dense_geomean(ad, bd)
            resid = g @ np.linalg.solve(ad, g) - bd
            assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(bd)

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            dense_geomean(np.diag([1.0, -1.0]), np.eye(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            dense_geomean(np.eye(2), np.eye(3))


class TestGaussChebyshev:
    def test_scalar_identity_case(self):
        a = SparseMatrix.from_dense([[1.0]], symmetric=True)
        bounds = PencilSpectrumBounds(1.0, 1.0, 0.0)
        for count in (1, 3, 8):
            out = gauss_chebyshev_geomean(a, a, np.array([1.0]), count, bounds)
            assert out[0] == pytest.approx(1.0)

    def test_scalar_balanced_bounds_are_exact(self):
        a = SparseMatrix.from_dense([[1.0]], symmetric=True)
        b = SparseMatrix.from_dense([[4.0]], symmetric=True)
        bounds = PencilSpectrumBounds(0.25, 0.25, 0.0)
        out = gauss_chebyshev_geomean(a, b, np.array([1.0]), 20, bounds)
        assert abs(out[0] - 2.0) <= 1e-6
        # (A#B)v = A * (B^{-1}A)^{-1/2} v: the brute-force Markov oracle
        # evaluated at the pencil eigenvalue must agree
        assert out[0] == pytest.approx(markov_invsqrt_trapezoid(0.25) * 1.0, abs=1e-6)

    def test_scalar_sweep_decreases_monotonically(self):
        # skewed bounds make the quadrature error visible and decaying;
        # the first four values are frozen from an independent scalar
        # evaluation of the rule against the closed form sqrt(a*b) = 2
        a = SparseMatrix.from_dense([[1.0]], symmetric=True)
        b = SparseMatrix.from_dense([[4.0]], symmetric=True)
        bounds = PencilSpectrumBounds(0.25 / 9.0, 0.25, 0.0)
        errors = []
        for count in (2, 4, 8, 16, 32):
            out = gauss_chebyshev_geomean(a, b, np.array([1.0]), count, bounds)
            errors.append(abs(out[0] - 2.0) / 2.0)
        assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))
        frozen = [1.339746e-01, 1.025668e-02, 5.314202e-05, 1.412112e-09]
        assert np.allclose(errors[:4], frozen, rtol=1e-4)
        assert errors[4] <= 1e-14

    @pytest.mark.parametrize("cond", [1e2, 1e3])
    def test_matrix_case_converges_to_oracle(self, cond):
        n = 40
        a, b = conditioned_pair(n, seed=5, cond=cond)
        v = np.random.default_rng(6).standard_normal(n)
        ref = dense_geomean(a, b) @ v
        pencil = np.linalg.eigvals(np.linalg.solve(b.to_dense(), a.to_dense())).real
        bounds = PencilSpectrumBounds(pencil.min(), pencil.max(), 0.0)
        err = relative_error(gauss_chebyshev_geomean(a, b, v, 64, bounds), ref)
        assert err <= 1e-6

    def test_error_decreases_with_count_on_matrix(self):
        n = 30
        a, b = conditioned_pair(n, seed=7, cond=1e3)
        v = np.random.default_rng(8).standard_normal(n)
        ref = dense_geomean(a, b) @ v
        pencil = np.linalg.eigvals(np.linalg.solve(b.to_dense(), a.to_dense())).real
        bounds = PencilSpectrumBounds(pencil.min(), pencil.max(), 0.0)
        errs = [
            relative_error(gauss_chebyshev_geomean(a, b, v, count, bounds), ref)
            for count in (8, 16, 32, 64)
        ]
        assert errs[-1] < errs[0]
        assert errs[-1] <= 1e-6


class TestRelativeError:
    def test_zero_for_equal(self):
        v = np.arange(1.0, 4.0)
        assert relative_error(v, v) == 0.0

    def test_doubling_gives_one(self):
        v = np.arange(1.0, 4.0)
        assert relative_error(2 * v, v) == pytest.approx(1.0)

    def test_small_perturbation(self):
        ref = np.array([1.0, 0.0])
        x = ref + np.array([0.0, 1e-8])
        assert relative_error(x, ref) == pytest.approx(1e-8, rel=1e-6)

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            relative_error(np.ones(2), np.zeros(2))

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            relative_error(np.ones(2), np.ones(3))

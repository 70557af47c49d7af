import numpy as np
import pytest

from geomean import (
    DimensionMismatchError,
    MatrixFormatError,
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

from conftest import random_sparse_spd


class TestMatvec:
    def test_identity(self):
        x = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(matvec(identity(3), x), x)

    def test_lap1d_row_sums(self):
        assert np.allclose(matvec(lap1d(3), np.ones(3)), [1.0, 0.0, 1.0])

    def test_lap1d_inverse_column(self):
        # dense oracle: lap1d(3) @ [3/4, 1/2, 1/4] = e1
        assert np.allclose(
            matvec(lap1d(3), np.array([0.75, 0.5, 0.25])), [1.0, 0.0, 0.0]
        )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            matvec(lap1d(3), np.ones(4))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            matvec(lap1d(3), np.array([1.0, np.nan, 0.0]))

    def test_matches_dense_reference(self):
        rng = np.random.default_rng(42)
        for seed in range(20):
            n = int(rng.integers(2, 65))
            m = random_sparse_spd(n, seed)
            x = rng.standard_normal(n)
            want = m.to_dense() @ x
            got = matvec(m, x)
            assert np.linalg.norm(got - want) <= 1e-14 * max(np.linalg.norm(want), 1.0)


class TestGenerators:
    def test_lap1d_tiny(self):
        assert np.array_equal(lap1d(1).to_dense(), [[2.0]])

    def test_lap1d_display(self):
        want = [[2, -1, 0], [-1, 2, -1], [0, -1, 2]]
        assert np.array_equal(lap1d(3).to_dense(), want)

    def test_lap1d_eigenvalues(self):
        lam = np.linalg.eigvalsh(lap1d(4).to_dense())
        want = 2.0 - 2.0 * np.cos(np.arange(1, 5) * np.pi / 5.0)
        assert np.allclose(np.sort(lam), np.sort(want))

    def test_lap2d_tiny(self):
        assert np.array_equal(lap2d(1).to_dense(), [[4.0]])

    def test_lap2d_2x2_grid(self):
        want = [[4, -1, -1, 0], [-1, 4, 0, -1], [-1, 0, 4, -1], [0, -1, -1, 4]]
        assert np.array_equal(lap2d(2).to_dense(), want)

    def test_lap2d_interior_row_sums(self):
        m = lap2d(4)
        sums = m.to_dense().sum(axis=1)
        interior = [i * 4 + j for i in range(1, 3) for j in range(1, 3)]
        assert np.allclose(sums[interior], 0.0)

    def test_zero_size_rejected(self):
        with pytest.raises(ValueError):
            lap1d(0)
        with pytest.raises(ValueError):
            lap2d(0)

    @pytest.mark.parametrize("n", [1, 2, 7, 16, 64])
    def test_laplacians_are_spd(self, n):
        np.linalg.cholesky(lap1d(n).to_dense())
        k = int(round(np.sqrt(n)))
        if k >= 1:
            np.linalg.cholesky(lap2d(k).to_dense())

    def test_random_spd_is_spd_and_deterministic(self):
        a = random_spd(20, 5)
        b = random_spd(20, 5)
        assert np.array_equal(a.values, b.values)
        np.linalg.cholesky(a.to_dense())


class TestInvariants:
    def test_bad_row_ptr(self):
        with pytest.raises(ValueError):
            SparseMatrix(2, 2, [0, 2, 1], [0, 1], [1.0, 1.0])

    def test_unsorted_columns(self):
        with pytest.raises(ValueError):
            SparseMatrix(1, 3, [0, 2], [2, 0], [1.0, 1.0])

    def test_nonfinite_values(self):
        with pytest.raises(ValueError):
            SparseMatrix(1, 1, [0, 1], [0], [np.inf])

    def test_asymmetric_flag_rejected(self):
        with pytest.raises(ValueError):
            SparseMatrix.from_dense([[1.0, 2.0], [0.0, 1.0]], symmetric=True)


class TestPencilCombine:
    def test_identity_sum(self):
        two_i = pencil_combine(1.0, identity(3), 1.0, identity(3))
        assert np.array_equal(two_i.to_dense(), 2.0 * np.eye(3))

    def test_zero_coefficient(self):
        a = lap1d(2)
        same = pencil_combine(1.0, a, 0.0, a)
        assert np.array_equal(same.to_dense(), a.to_dense())

    def test_diagonal_values(self):
        c = pencil_combine(2.0, lap1d(3), 3.0, identity(3))
        assert np.allclose(np.diag(c.to_dense()), [7.0, 7.0, 7.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            pencil_combine(1.0, lap1d(2), 1.0, lap1d(3))

    def test_linearity_against_matvec(self):
        rng = np.random.default_rng(3)
        for seed in range(10):
            n = int(rng.integers(2, 40))
            a = random_sparse_spd(n, seed)
            b = random_sparse_spd(n, seed + 100)
            alpha, beta = rng.standard_normal(2)
            x = rng.standard_normal(n)
            lhs = matvec(pencil_combine(alpha, a, beta, b), x)
            rhs = alpha * matvec(a, x) + beta * matvec(b, x)
            scale = max(np.abs(rhs).max(), 1.0)
            assert np.abs(lhs - rhs).max() <= 1e-14 * scale

    def test_symmetric_flag_propagates(self):
        c = pencil_combine(1.0, lap1d(3), 2.0, identity(3))
        assert c.symmetric


class TestMatrixMarket:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "a.mtx"
        a = lap1d(3)
        write_matrix_market(a, path)
        back = read_matrix_market(path)
        assert back.symmetric
        assert np.array_equal(back.to_dense(), a.to_dense())

    def test_symmetric_lower_triangle_expansion(self, tmp_path):
        path = tmp_path / "l.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real symmetric\n"
            "3 3 5\n"
            "1 1 2.0\n2 1 -1.0\n2 2 2.0\n3 2 -1.0\n3 3 2.0\n"
        )
        m = read_matrix_market(path)
        assert np.array_equal(m.to_dense(), lap1d(3).to_dense())
        assert m.symmetric

    def test_one_based_indices(self, tmp_path):
        path = tmp_path / "g.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n2 1 5.0\n"
        )
        m = read_matrix_market(path)
        assert m.to_dense()[1, 0] == 5.0

    def test_duplicates_summed(self, tmp_path):
        path = tmp_path / "d.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n"
            "2 2 3\n1 1 1.0\n1 1 2.5\n2 2 1.0\n"
        )
        m = read_matrix_market(path)
        assert m.to_dense()[0, 0] == 3.5

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text("%%NotMatrixMarket nonsense\n1 1 1\n1 1 1.0\n")
        with pytest.raises(MatrixFormatError):
            read_matrix_market(path)

    def test_complex_field_rejected(self, tmp_path):
        path = tmp_path / "c.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate complex general\n"
            "1 1 1\n1 1 1.0 2.0\n"
        )
        with pytest.raises(MatrixFormatError):
            read_matrix_market(path)

    def test_out_of_range_indices(self, tmp_path):
        path = tmp_path / "o.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n"
        )
        with pytest.raises(MatrixFormatError):
            read_matrix_market(path)

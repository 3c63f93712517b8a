import numpy as np
import pytest

from factored_evolution import (
    DenseMatrixOperator,
    DimensionMismatchError,
    MixedBackendError,
    NotInvertibleError,
    SemigroupOverflowError,
    SpectralDiagonalOperator,
    TranslationOperator,
    UniformGrid,
    UnsupportedOperationError,
    commutation_defect,
    resolvent_solve,
)


def periodic_grid(n=64, length=2 * np.pi):
    return UniformGrid(0.0, length / n, n)


class TestApply:
    def test_spectral_diagonal_action(self):
        op = SpectralDiagonalOperator("L", [1.0, 4.0, 9.0], scale=-1.0)
        assert np.array_equal(op.apply(np.ones(3)), [-1.0, -4.0, -9.0])

    def test_dense_zero_matrix(self):
        op = DenseMatrixOperator("Z", np.zeros((3, 3)))
        assert np.array_equal(op.apply(np.array([1.0, 2.0, 3.0])), np.zeros(3))

    def test_translation_spectral_derivative(self):
        grid = periodic_grid(128)
        x = grid.points()
        op = TranslationOperator("T", 1.0, grid)
        assert np.max(np.abs(op.apply(np.sin(x)) - np.cos(x))) <= 1e-8

    def test_dimension_mismatch(self):
        op = SpectralDiagonalOperator("L", [1.0, 2.0])
        with pytest.raises(DimensionMismatchError):
            op.apply(np.ones(3))


class TestSemigroup:
    def test_t_zero_is_exact_identity(self):
        grid = periodic_grid(32)
        for op in (
            DenseMatrixOperator("D", np.array([[0.0, 1.0], [-1.0, 0.0]])),
            SpectralDiagonalOperator("S", [-1.0, -2.0]),
            TranslationOperator("T", 1.5, grid),
        ):
            v = np.linspace(-1.0, 2.0, op.dim)
            assert np.array_equal(op.semigroup(0.0, v), v)

    def test_spectral_decay(self):
        op = SpectralDiagonalOperator("S", [-1.0, -2.0])
        out = op.semigroup(1.0, np.ones(2))
        assert np.allclose(out, [np.exp(-1.0), np.exp(-2.0)], rtol=1e-14, atol=0)

    def test_translation_shift(self):
        grid = periodic_grid(128)
        x = grid.points()
        op = TranslationOperator("T", 2.0, grid)
        out = op.semigroup(0.5, np.sin(x))
        assert np.max(np.abs(out - np.sin(x + 1.0))) <= 1e-8

    def test_translation_is_a_group(self):
        grid = periodic_grid(64)
        v = np.cos(grid.points())
        op = TranslationOperator("T", 1.0, grid)
        back = op.semigroup(-0.7, op.semigroup(0.7, v))
        assert np.max(np.abs(back - v)) <= 1e-12

    def test_translation_norm_preserving(self):
        grid = periodic_grid(64)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(64)
        op = TranslationOperator("T", 0.9, grid)
        assert abs(np.linalg.norm(op.semigroup(1.3, v)) - np.linalg.norm(v)) <= 1e-10 * np.linalg.norm(v)

    @pytest.mark.parametrize("backend", ["dense-sym", "dense-nonsym", "spectral", "translation"])
    def test_semigroup_law(self, backend):
        rng = np.random.default_rng(8)
        if backend == "dense-sym":
            a = rng.standard_normal((4, 4))
            op = DenseMatrixOperator("D", 0.5 * (a + a.T))
            v = rng.standard_normal(4)
        elif backend == "dense-nonsym":
            op = DenseMatrixOperator("D", rng.standard_normal((4, 4)) * 0.5)
            v = rng.standard_normal(4)
        elif backend == "spectral":
            op = SpectralDiagonalOperator("S", rng.uniform(-2, 0.5, 6))
            v = rng.standard_normal(6)
        else:
            grid = periodic_grid(64)
            op = TranslationOperator("T", 1.2, grid)
            v = np.sin(grid.points()) + 0.3 * np.cos(2 * grid.points())
        for t, s in rng.uniform(0.0, 2.0, (5, 2)):
            once = op.semigroup(t + s, v)
            twice = op.semigroup(s, op.semigroup(t, v))
            assert np.max(np.abs(once - twice)) <= 1e-9 * max(1.0, np.max(np.abs(once)))

    def test_spectral_overflow(self):
        op = SpectralDiagonalOperator("S", [5.0])
        with pytest.raises(SemigroupOverflowError):
            op.semigroup(1000.0, np.ones(1))


class TestZeroExtension:
    def grid(self):
        return UniformGrid(-8.0, 0.05, 321)

    def pulse(self, x, center=0.0):
        return np.exp(-((x - center) ** 2) / (2 * 0.5**2))

    def test_shift_matches_analytic_in_interior(self):
        grid = self.grid()
        x = grid.points()
        op = TranslationOperator("T", 1.0, grid, boundary="zero-extension")
        t = 0.3
        out = op.semigroup(t, self.pulse(x))
        margin = op.influence_margin(t)
        interior = slice(margin, -margin)
        assert np.max(np.abs(out[interior] - self.pulse(x[interior], center=-t))) <= 1e-5

    def test_semigroup_law_interior(self):
        grid = self.grid()
        x = grid.points()
        op = TranslationOperator("T", -0.8, grid, boundary="zero-extension")
        v = self.pulse(x)
        once = op.semigroup(0.9, v)
        twice = op.semigroup(0.5, op.semigroup(0.4, v))
        margin = op.influence_margin(0.9)
        assert np.max(np.abs(once[margin:-margin] - twice[margin:-margin])) <= 1e-5

    def test_central_difference_derivative(self):
        grid = UniformGrid(-8.0, 0.0125, 1281)
        x = grid.points()
        op = TranslationOperator("T", 2.0, grid, boundary="zero-extension")
        margin = 4
        exact = 2.0 * (-x / 0.25) * self.pulse(x)  # 2 * d/dx of the pulse
        out = op.apply(self.pulse(x))
        # second-order differences: error ~ speed * dx^2 * |f'''| / 6
        assert np.max(np.abs(out[margin:-margin] - exact[margin:-margin])) <= 1e-3

    def test_complex_speed_rejected(self):
        with pytest.raises(UnsupportedOperationError):
            TranslationOperator("T", 1.0 + 1.0j, self.grid(), boundary="zero-extension")


class TestResolventSolve:
    def test_componentwise_divide(self):
        a = SpectralDiagonalOperator("a", [3.0, 5.0])
        b = SpectralDiagonalOperator("b", [1.0, 1.0])
        assert np.array_equal(resolvent_solve(a, b, np.array([2.0, 4.0])), [1.0, 1.0])

    def test_equal_operators_not_invertible(self):
        a = SpectralDiagonalOperator("a", [1.0, 2.0])
        with pytest.raises(NotInvertibleError):
            resolvent_solve(a, a, np.ones(2))

    def test_dense_round_trip(self):
        rng = np.random.default_rng(9)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        a = DenseMatrixOperator("A", q @ np.diag([1.0, 2.0, 3.0, 4.0]) @ q.T)
        b = DenseMatrixOperator("B", q @ np.diag([-1.0, -2.0, 0.5, 0.0]) @ q.T)
        rhs = rng.standard_normal(4)
        w = resolvent_solve(a, b, rhs)
        back = a.apply(w) - b.apply(w)
        assert np.max(np.abs(back - rhs)) <= 1e-9 * max(1.0, np.max(np.abs(rhs)))

    def test_spectral_round_trip_property(self):
        rng = np.random.default_rng(10)
        for _ in range(10):
            a = SpectralDiagonalOperator("a", rng.uniform(1.0, 2.0, 5))
            b = SpectralDiagonalOperator("b", rng.uniform(-1.0, 0.0, 5))
            rhs = rng.standard_normal(5)
            w = resolvent_solve(a, b, rhs)
            assert np.max(np.abs(a.apply(w) - b.apply(w) - rhs)) <= 1e-9

    def test_translation_equal_speeds_unsupported(self):
        grid = periodic_grid(32)
        a = TranslationOperator("a", 1.0, grid)
        b = TranslationOperator("b", 1.0, grid)
        with pytest.raises(UnsupportedOperationError):
            resolvent_solve(a, b, np.ones(32))

    def test_translation_distinct_speeds_mean_zero(self):
        grid = periodic_grid(64)
        x = grid.points()
        a = TranslationOperator("a", 1.0, grid)
        b = TranslationOperator("b", -1.0, grid)
        rhs = np.sin(x)
        w = resolvent_solve(a, b, rhs)
        assert np.max(np.abs(a.apply(w) - b.apply(w) - rhs)) <= 1e-9

    def test_translation_constant_mode_rejected(self):
        grid = periodic_grid(64)
        a = TranslationOperator("a", 1.0, grid)
        b = TranslationOperator("b", -1.0, grid)
        with pytest.raises(NotInvertibleError):
            resolvent_solve(a, b, np.ones(64))

    def test_mixed_families_rejected(self):
        a = SpectralDiagonalOperator("a", [1.0, 2.0])
        b = DenseMatrixOperator("b", np.eye(2))
        with pytest.raises(MixedBackendError):
            resolvent_solve(a, b, np.ones(2))


class TestCommutationDefect:
    def test_diagonal_operators_commute_exactly(self):
        a = SpectralDiagonalOperator("a", [1.0, 2.0, 3.0])
        b = SpectralDiagonalOperator("b", [-1.0, 5.0, 0.0])
        assert commutation_defect(a, b, [np.ones(3), np.arange(3.0)]) == 0.0

    def test_nilpotent_pair(self):
        # AB - BA = diag(1, -1), so the probe (1, 0) maps to itself
        a = DenseMatrixOperator("a", [[0.0, 1.0], [0.0, 0.0]])
        b = DenseMatrixOperator("b", [[0.0, 0.0], [1.0, 0.0]])
        assert commutation_defect(a, b, [np.array([1.0, 0.0])]) == pytest.approx(1.0)

    def test_operator_with_itself(self):
        rng = np.random.default_rng(12)
        op = DenseMatrixOperator("a", rng.standard_normal((3, 3)))
        assert commutation_defect(op, op, [rng.standard_normal(3)]) == 0.0

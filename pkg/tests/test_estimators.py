import numpy as np
import pytest

from pcwk import (
    FunctionalWeights,
    IllPosedError,
    MinimalityError,
    SpectralDensity,
    build_block_matrix,
    evaluate_mse,
    extrapolate,
    extrapolate_noiseless,
    filtering,
    forbidden_lags,
    interpolate,
    interpolate_noiseless,
)
from pcwk.oracle import time_domain_projection_converged
from conftest import GRID, ar1, coupled_ma2, ma1, white


def unit_interp(n=0, dim=1):
    blocks = np.zeros((n + 1, dim), dtype=complex)
    blocks[0, 0] = 1.0
    return FunctionalWeights.interpolation(blocks)


class TestBlockMatrices:
    def test_inverse_kernel_block(self):
        bm = build_block_matrix("B", white(), white(), [0], [0])
        assert bm.dense[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_error_floor_kernel_block(self):
        # f (f+g)^{-1} g = 1/2 for the white pair; its lag-0 coefficient is 1/2
        bm = build_block_matrix("W", white(), white(), [0], [0])
        assert bm.dense[0, 0] == pytest.approx(0.5, abs=1e-12)

    def test_hankel_block_vanishes_for_constant_kernel(self):
        bm = build_block_matrix("V", white(), white(), [1], [0])
        assert abs(bm.dense[0, 0]) < 1e-13

    def test_hermitian_and_psd_kinds(self):
        f, g = ma1(2, 0.4), white(dim=2, scale=0.5)
        rng = range(0, 3)
        for kind in ("B", "U", "R", "W"):
            dense = build_block_matrix(kind, f, g, rng, rng).dense
            np.testing.assert_allclose(dense, dense.conj().T, atol=1e-12)
            assert np.linalg.eigvalsh(dense).min() > -1e-12

    def test_minimality_gate(self):
        f = SpectralDensity.from_coeffs({0: 2.0, 1: -1.0, -1: -1.0}, grid_size=GRID)
        with pytest.raises(MinimalityError):
            build_block_matrix("B", f, None, [0], [0])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            build_block_matrix("X", white(), None, [0], [0])


class TestInterpolation:
    def test_white_noisy_single_gap(self):
        sol = interpolate(white(), white(), unit_interp())
        assert sol.mse == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(sol.h_grid, 0.0, atol=1e-12)

    def test_zero_weights(self):
        w = FunctionalWeights.interpolation(np.zeros((1, 1)))
        sol = interpolate(white(), white(), w)
        assert sol.mse == pytest.approx(0.0, abs=1e-14)

    def test_noiseless_white_variance(self):
        sol = interpolate_noiseless(white(scale=2.5), unit_interp())
        assert sol.mse == pytest.approx(2.5, abs=1e-10)

    def test_absent_noise_routes_to_noiseless(self):
        sol = interpolate(ar1(), None, unit_interp())
        assert sol.mse == pytest.approx(0.8, abs=1e-9)

    def test_identity_two_blocks(self):
        w = FunctionalWeights.interpolation(np.ones((2, 2)))
        sol = interpolate_noiseless(white(dim=2), w)
        assert sol.mse == pytest.approx(4.0, abs=1e-10)

    def test_ma1_single_gap_closed_form(self):
        # 1 / ((1/2pi) int 1/f) with f = |1 + b e^{-il}|^2 equals 1 - b^2
        sol = interpolate_noiseless(ma1(), unit_interp())
        assert sol.mse == pytest.approx(0.75, rel=1e-10)

    def test_ma1_single_gap_matches_oracle(self):
        sol = interpolate_noiseless(ma1(), unit_interp())
        proj, _ = time_domain_projection_converged(ma1(), None, unit_interp())
        assert sol.mse == pytest.approx(proj.mse, rel=1e-6)

    def test_noisy_coupled_matches_oracle(self):
        rng = np.random.default_rng(5)
        blocks = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        w = FunctionalWeights.interpolation(blocks)
        f, g = coupled_ma2(), white(dim=2, scale=0.7)
        sol = interpolate(f, g, w)
        proj, _ = time_domain_projection_converged(f, g, w)
        assert sol.mse == pytest.approx(proj.mse, rel=1e-6)

    def test_long_gap_matches_oracle(self):
        rng = np.random.default_rng(8)
        blocks = rng.normal(size=(9, 1)) * 0.8 ** np.arange(9)[:, None]
        w = FunctionalWeights.interpolation(blocks)
        f, g = ma1(), white(scale=0.5)
        sol = interpolate(f, g, w)
        proj, _ = time_domain_projection_converged(f, g, w)
        assert sol.mse == pytest.approx(proj.mse, rel=1e-5)

    def test_formula_agrees_with_quadrature(self):
        w = FunctionalWeights.interpolation(np.array([[1.0, -0.5], [0.3, 0.2]]))
        f, g = coupled_ma2(), white(dim=2, scale=0.7)
        sol = interpolate(f, g, w)
        assert evaluate_mse(sol, f, g, w) == pytest.approx(sol.mse, abs=1e-10)

    def test_wrong_horizon_rejected(self):
        w = FunctionalWeights.filtering([[1.0]])
        with pytest.raises(ValueError):
            interpolate(white(), white(), w)


class TestExtrapolation:
    def test_white_noisy(self):
        w = FunctionalWeights.extrapolation([[1.0]])
        sol = extrapolate(white(), white(), w)
        assert 0.5 <= sol.mse <= 1.0 + 1e-12
        proj, _ = time_domain_projection_converged(white(), white(), w)
        assert sol.mse == pytest.approx(proj.mse, rel=1e-6)

    def test_zero_weights(self):
        w = FunctionalWeights.extrapolation(np.zeros((2, 1)))
        sol = extrapolate(white(), white(), w)
        assert sol.mse == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(sol.h_grid, 0.0, atol=1e-12)

    def test_white_noiseless_sum_of_squares(self):
        w = FunctionalWeights.extrapolation([[1.0], [0.5], [0.25]])
        sol = extrapolate(white(), None, w)
        assert sol.mse == pytest.approx(1.0 + 0.25 + 0.0625, abs=1e-10)

    def test_ma1_one_step(self):
        w = FunctionalWeights.extrapolation([[1.0]])
        sol = extrapolate_noiseless(ma1(), w)
        assert sol.mse == pytest.approx(1.0, rel=1e-8)

    def test_ma1_two_blocks(self):
        w = FunctionalWeights.extrapolation([[1.0], [1.0]])
        sol = extrapolate_noiseless(ma1(), w)
        assert sol.mse == pytest.approx(3.25, rel=1e-8)

    def test_truncation_must_cover_weights(self):
        w = FunctionalWeights.extrapolation([[1.0], [1.0], [1.0]])
        with pytest.raises(ValueError):
            extrapolate_noiseless(ma1(), w, truncation=1)

    def test_monotone_and_cauchy_in_truncation(self):
        w = FunctionalWeights.extrapolation([[1.0], [0.5]])
        f, g = ma1(), white(scale=0.5)
        values = [extrapolate(f, g, w, truncation=J).mse for J in (8, 16, 32, 64, 128)]
        for early, late in zip(values, values[1:]):
            assert late <= early + 1e-10
        assert abs(values[-1] - values[-2]) < 1e-8


class TestFiltering:
    def test_white_pair(self):
        w = FunctionalWeights.filtering([[1.0]])
        sol = filtering(white(), white(), w)
        assert sol.mse == pytest.approx(0.5, abs=1e-10)
        np.testing.assert_allclose(sol.solved_blocks, 0.0, atol=1e-12)

    def test_zero_weights(self):
        w = FunctionalWeights.filtering(np.zeros((1, 1)))
        sol = filtering(white(), white(), w)
        assert sol.mse == pytest.approx(0.0, abs=1e-14)

    def test_scalar_wiener(self):
        w = FunctionalWeights.filtering([[1.0]])
        sol = filtering(white(scale=2.0), white(), w)
        assert sol.mse == pytest.approx(2.0 / 3.0, abs=1e-10)

    def test_requires_noise(self):
        w = FunctionalWeights.filtering([[1.0]])
        with pytest.raises(ValueError):
            filtering(white(), None, w)

    def test_ma1_matches_oracle(self):
        w = FunctionalWeights.filtering([[1.0], [0.5]])
        f, g = ma1(), white(scale=0.5)
        sol = filtering(f, g, w)
        proj, _ = time_domain_projection_converged(f, g, w)
        assert sol.mse == pytest.approx(proj.mse, rel=1e-6)


class TestEvaluateMse:
    def test_zero_estimate_gives_functional_variance(self):
        w = FunctionalWeights.extrapolation([[1.0], [1.0]])
        f = ma1()
        value = evaluate_mse(np.zeros((GRID, 1)), f, None, w)
        # var = a^T C a with C the lag covariances of the moving average
        expected = 2 * 1.25 + 2 * 0.5
        assert value == pytest.approx(expected, rel=1e-10)

    def test_matches_solver_value(self):
        w = FunctionalWeights.filtering([[1.0], [0.5]])
        f, g = ma1(), white(scale=0.5)
        sol = filtering(f, g, w)
        assert evaluate_mse(sol, f, g, w) == pytest.approx(sol.mse, abs=1e-10)

    def test_perturbations_in_subspace_never_improve(self):
        w = FunctionalWeights.filtering([[1.0], [0.5]])
        f, g = ma1(), white(scale=0.5)
        sol = filtering(f, g, w)
        lam = -np.pi + 2 * np.pi * np.arange(GRID) / GRID
        rng = np.random.default_rng(17)
        for _ in range(10):
            lag = int(rng.integers(0, 40))  # allowed lags are <= 0
            scale = rng.normal() * 0.1
            delta = scale * np.exp(-1j * lag * lam).reshape(GRID, 1)
            worse = evaluate_mse(sol.h_grid + delta, f, g, w)
            assert worse >= sol.mse - 1e-12

    def test_joint_scaling(self):
        w = FunctionalWeights.filtering([[1.0], [0.5]])
        f, g = ma1(), white(scale=0.5)
        base = filtering(f, g, w)
        scaled = filtering(f.scaled(3.0), g.scaled(3.0), w)
        assert scaled.mse == pytest.approx(3.0 * base.mse, rel=1e-12)
        np.testing.assert_allclose(scaled.h_grid, base.h_grid, atol=1e-10)


class TestForbiddenLags:
    def test_masks(self):
        lags = np.arange(-3, 4)
        np.testing.assert_array_equal(
            forbidden_lags("interpolation", 1, lags),
            [False, False, False, True, True, False, False],
        )
        np.testing.assert_array_equal(
            forbidden_lags("extrapolation", 0, lags),
            [False, False, False, True, True, True, True],
        )
        np.testing.assert_array_equal(
            forbidden_lags("filtering", 0, lags),
            [False, False, False, False, True, True, True],
        )

    @pytest.mark.parametrize(
        "make",
        [
            lambda: interpolate(ma1(), white(scale=0.5),
                                unit_interp(n=2)),
            lambda: extrapolate(ma1(), white(scale=0.5),
                                FunctionalWeights.extrapolation([[1.0], [0.5]])),
            lambda: filtering(ma1(), white(scale=0.5),
                              FunctionalWeights.filtering([[1.0], [0.5]])),
            lambda: interpolate_noiseless(ar1(), unit_interp()),
        ],
    )
    def test_solutions_live_in_their_subspace(self, make):
        sol = make()
        assert sol.diagnostics["forbidden_lag_residual"] < 1e-8


class TestConditioning:
    def test_condition_threshold_enforced(self):
        w = unit_interp()
        with pytest.raises((IllPosedError, MinimalityError)):
            interpolate(white(), white(), w, cond_threshold=0.5)

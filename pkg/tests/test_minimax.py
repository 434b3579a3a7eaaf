import warnings

import numpy as np
import pytest

from pcwk import (
    FunctionalWeights,
    InfeasibleClassError,
    build_q_operator,
    evaluate_on_grid,
    filtering_relation_residuals,
    interpolate_noiseless,
    least_favorable_class_y,
    least_favorable_d01_extrapolation,
    least_favorable_d0eps_filtering_scalar,
    least_favorable_dm_interpolation,
    saddle_point_check,
    sample_d01_class,
    sample_d0eps_class,
    sample_dm_class,
    sample_power_class,
)
from pcwk.minimax import (
    d01_class_residual,
    d0eps_class_residual,
    dm_class_residual,
    power_class_residual,
)
from conftest import GRID, white

GOLDEN_TOP = (3.0 + np.sqrt(5.0)) / 2.0  # top eigenvalue of [[2, 1], [1, 1]]


def finite_weights(blocks):
    return FunctionalWeights.extrapolation_finite(blocks)


class TestQOperator:
    def test_single_unit_block(self):
        q = build_q_operator(finite_weights([[1.0]]))
        assert q.dense.shape == (1, 1)
        assert q.dense[0, 0] == pytest.approx(1.0)

    def test_two_unit_blocks(self):
        q = build_q_operator(finite_weights([[1.0], [1.0]]))
        np.testing.assert_allclose(q.dense, [[2.0, 1.0], [1.0, 1.0]], atol=1e-14)

    def test_zero_weights(self):
        q = build_q_operator(finite_weights(np.zeros((2, 1))))
        np.testing.assert_allclose(q.dense, 0.0)

    def test_hermitian_psd_and_floor(self):
        rng = np.random.default_rng(2)
        blocks = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        q = build_q_operator(FunctionalWeights.extrapolation(blocks))
        dense = q.dense
        np.testing.assert_allclose(dense, dense.conj().T, atol=1e-13)
        eigs = np.linalg.eigvalsh(dense)
        assert eigs.min() > -1e-12
        assert eigs.max() >= np.linalg.norm(blocks[0]) ** 2 - 1e-12

    def test_padding_extends_range(self):
        q = build_q_operator(finite_weights([[1.0]]), n_range=2)
        assert q.dense.shape == (3, 3)


class TestClassY:
    def test_single_block(self):
        result = least_favorable_class_y(finite_weights([[1.0]]), 1.0)
        assert result.minimax_mse == pytest.approx(1.0, abs=1e-12)
        vals = evaluate_on_grid(result.f0).values
        np.testing.assert_allclose(vals[:, 0, 0], 1.0, atol=1e-12)

    def test_two_blocks_golden(self):
        result = least_favorable_class_y(finite_weights([[1.0], [1.0]]), 1.0)
        assert result.certificate["nu_squared"] == pytest.approx(
            GOLDEN_TOP, abs=1e-12
        )
        assert result.minimax_mse == pytest.approx(GOLDEN_TOP, abs=1e-12)
        assert result.h0.mse == pytest.approx(GOLDEN_TOP, abs=1e-9)

    def test_rank_one_vector_case(self):
        w = finite_weights([[1.0, 0.0]])
        result = least_favorable_class_y(w, 2.0)
        assert result.minimax_mse == pytest.approx(2.0, abs=1e-12)

    def test_power_scales_error(self):
        w = finite_weights([[1.0], [1.0]])
        one = least_favorable_class_y(w, 1.0)
        five = least_favorable_class_y(w, 5.0)
        assert five.minimax_mse == pytest.approx(5.0 * one.minimax_mse, rel=1e-12)

    def test_monotone_in_horizon(self):
        w = finite_weights([[1.0], [0.5]])
        nu = [
            least_favorable_class_y(w, 1.0, n_range=n).certificate["nu_squared"]
            for n in (1, 2, 4)
        ]
        assert nu[0] <= nu[1] + 1e-12 <= nu[2] + 2e-12

    def test_zero_weights_degenerate(self):
        result = least_favorable_class_y(finite_weights(np.zeros((2, 1))), 3.0)
        assert result.minimax_mse == 0.0
        assert result.certificate.get("degenerate")

    def test_saddle_margins_nonnegative(self):
        w = finite_weights([[1.0], [1.0]])
        result = least_favorable_class_y(w, 1.0, grid_size=GRID)
        rng = np.random.default_rng(123)
        samples = sample_power_class(rng, 1, 1, 1.0, 40, grid_size=GRID)
        report = saddle_point_check(
            result.h0, result.f0, None, samples, w,
            validator=lambda fs: power_class_residual(fs, 1.0),
        )
        assert report.n_rejected == 0
        assert report.min_margin >= -1e-8

    def test_out_of_class_sample_rejected(self):
        w = finite_weights([[1.0], [1.0]])
        result = least_favorable_class_y(w, 1.0, grid_size=GRID)
        bad = [white(scale=7.0)]
        report = saddle_point_check(
            result.h0, result.f0, None, bad, w,
            validator=lambda fs: power_class_residual(fs, 1.0),
        )
        assert report.n_rejected == 1
        assert report.margins.size == 0


class TestD01:
    def test_single_block(self):
        result = least_favorable_d01_extrapolation(
            finite_weights([[1.0]]), np.array([[1.0]])
        )
        assert result.minimax_mse == pytest.approx(1.0, abs=1e-12)

    def test_golden_instance(self):
        result = least_favorable_d01_extrapolation(
            finite_weights([[1.0], [1.0]]), np.array([[1.0]])
        )
        assert result.minimax_mse == pytest.approx(GOLDEN_TOP, abs=1e-12)
        assert result.certificate["eigen_residual"] < 1e-8

    def test_matrix_power_reduction(self):
        w = finite_weights([[1.0, 0.0]])
        result = least_favorable_d01_extrapolation(w, np.eye(2))
        assert result.minimax_mse == pytest.approx(2.0, abs=1e-12)
        # one eigenvector family cannot match a full-rank power matrix
        assert result.certificate["power_constraint_residual"] > 0.1
        realized = evaluate_on_grid(result.f0).values.mean(axis=0)
        assert np.trace(realized).real == pytest.approx(2.0, abs=1e-10)

    def test_agreement_with_power_class(self):
        w = finite_weights([[1.0, 0.5], [0.25, -0.3]])
        p_total = 2.0
        via_y = least_favorable_class_y(w, p_total)
        via_d01 = least_favorable_d01_extrapolation(
            w, (p_total / 2.0) * np.eye(2)
        )
        assert via_d01.minimax_mse == pytest.approx(via_y.minimax_mse, abs=1e-8)

    def test_invalid_power_matrix(self):
        w = finite_weights([[1.0]])
        with pytest.raises(ValueError):
            least_favorable_d01_extrapolation(w, np.array([[0.0]]))
        with pytest.raises(ValueError):
            least_favorable_d01_extrapolation(w, np.array([[-1.0]]))

    def test_saddle_margins(self):
        w = finite_weights([[1.0], [1.0]])
        P = np.array([[1.0]])
        result = least_favorable_d01_extrapolation(w, P, grid_size=GRID)
        rng = np.random.default_rng(99)
        samples = sample_d01_class(rng, P, 1, 50, grid_size=GRID)
        report = saddle_point_check(
            result.h0, result.f0, None, samples, w,
            validator=lambda fs: d01_class_residual(fs, P),
        )
        assert report.n_rejected == 0
        assert report.min_margin >= -1e-8


class TestDmInterpolation:
    def test_white_class(self):
        w = FunctionalWeights.interpolation([[1.0]])
        result = least_favorable_dm_interpolation([np.array([[1.0]])], w,
                                                  grid_size=GRID)
        assert result.minimax_mse == pytest.approx(1.0, abs=1e-10)
        vals = evaluate_on_grid(result.f0).values
        np.testing.assert_allclose(vals[:, 0, 0], 1.0, atol=1e-10)

    def test_autoregressive_class(self):
        w = FunctionalWeights.interpolation([[1.0]])
        result = least_favorable_dm_interpolation(
            [np.array([[1.25]]), np.array([[0.5]])], w, grid_size=GRID
        )
        assert result.minimax_mse == pytest.approx(0.8, abs=1e-10)
        # the worst density is the inverse of the moment polynomial
        lam = -np.pi + 2 * np.pi * np.arange(GRID) / GRID
        vals = evaluate_on_grid(result.f0).values[:, 0, 0]
        np.testing.assert_allclose(vals, 1.0 / (1.25 + np.cos(lam)), atol=1e-10)

    def test_reported_error_matches_solver(self):
        w = FunctionalWeights.interpolation([[1.0], [0.5]])
        p = [np.array([[1.5]]), np.array([[0.4]]), np.array([[0.1]])]
        result = least_favorable_dm_interpolation(p, w, grid_size=GRID)
        check = interpolate_noiseless(result.f0, w)
        assert check.mse == pytest.approx(result.minimax_mse, abs=1e-10)

    def test_moment_reproduction(self):
        w = FunctionalWeights.interpolation([[1.0], [0.5]])
        p = [np.array([[1.5]]), np.array([[0.4]]), np.array([[0.1]])]
        result = least_favorable_dm_interpolation(p, w, grid_size=GRID)
        assert dm_class_residual(result.f0, p) < 1e-8

    def test_scalar_underdetermined_moments(self):
        # fewer constraints than the horizon: the solver extends the moments
        # (weights chosen so the extended polynomial stays positive)
        w = FunctionalWeights.interpolation([[1.0], [0.25]])
        result = least_favorable_dm_interpolation([np.array([[1.0]])], w,
                                                  grid_size=GRID)
        assert result.certificate["system_residual"] < 1e-8
        assert dm_class_residual(result.f0, [np.array([[1.0]])]) < 1e-8
        check = interpolate_noiseless(result.f0, w)
        assert check.mse == pytest.approx(result.minimax_mse, abs=1e-9)

    def test_underdetermined_infeasible_extension_rejected(self):
        # the forward-substituted moments can leave the positive cone; that
        # must surface as class infeasibility, not a bogus density
        w = FunctionalWeights.interpolation([[1.0], [1.0]])
        with pytest.raises(InfeasibleClassError):
            least_favorable_dm_interpolation([np.array([[1.0]])], w,
                                             grid_size=GRID)

    def test_underdetermined_needs_scalar(self):
        w = FunctionalWeights.interpolation(np.ones((2, 2)))
        with pytest.raises(ValueError, match="scalar"):
            least_favorable_dm_interpolation([np.eye(2)], w, grid_size=GRID)

    def test_non_hermitian_constraint_rejected(self):
        w = FunctionalWeights.interpolation(np.ones((1, 2)))
        bad = [np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]])]
        with pytest.raises(ValueError, match="Hermitian"):
            least_favorable_dm_interpolation(bad, w, grid_size=GRID)

    def test_indefinite_polynomial_rejected(self):
        w = FunctionalWeights.interpolation([[1.0]])
        bad = [np.array([[1.0]]), np.array([[0.8]])]  # 1 + 1.6 cos dips below 0
        with pytest.raises(InfeasibleClassError):
            least_favorable_dm_interpolation(bad, w, grid_size=GRID)

    def test_optimal_error_margins(self):
        # within the constrained band every class member shares the solver
        # blocks, so the optimal errors coincide and margins are ~ 0
        w = FunctionalWeights.interpolation([[1.0]])
        p = [np.array([[1.25]]), np.array([[0.5]])]
        result = least_favorable_dm_interpolation(p, w, grid_size=GRID)
        rng = np.random.default_rng(10)
        samples = sample_dm_class(rng, p, extra_degree=3, count=30, grid_size=GRID)
        report = saddle_point_check(
            result.h0, result.f0, None, samples, w,
            validator=lambda fs: dm_class_residual(fs, p),
            optimal_error=lambda fs, gs: interpolate_noiseless(fs, w).mse,
        )
        assert report.n_rejected == 0
        assert report.min_margin >= -1e-8


class TestFilteringRelations:
    def test_white_candidate_satisfies_relations(self):
        w = FunctionalWeights.filtering([[1.0]])
        report = filtering_relation_residuals(
            white(), white(), w, alpha2=0.25, beta2=0.25,
            phi=0.0, eps=1.0, g2=white(),
        )
        assert report.rel_residual_noise_relation < 1e-10
        assert report.rel_residual_signal_relation < 1e-10
        assert report.slackness_residual == 0.0
        assert not report.phi_positive
        assert report.signal_power == pytest.approx(1.0, abs=1e-12)
        assert report.noise_power == pytest.approx(1.0, abs=1e-12)

    def test_zero_weights_need_zero_multiplier(self):
        w = FunctionalWeights.filtering(np.zeros((1, 1)))
        ok = filtering_relation_residuals(
            white(), white(), w, alpha2=0.0, beta2=0.0, phi=0.0, eps=1.0,
            g2=white(),
        )
        assert ok.residual_noise_relation == pytest.approx(0.0, abs=1e-12)
        bad = filtering_relation_residuals(
            white(), white(), w, alpha2=0.25, beta2=0.0, phi=0.0, eps=1.0,
            g2=white(),
        )
        assert bad.residual_noise_relation > 0.5

    def test_positive_phi_flagged(self):
        w = FunctionalWeights.filtering([[1.0]])
        report = filtering_relation_residuals(
            white(), white(), w, alpha2=0.25, beta2=0.25,
            phi=np.full(GRID, 0.1), eps=1.0, g2=white(),
        )
        assert report.phi_positive


class TestD0EpsSolver:
    def test_symmetric_case_certified(self):
        w = FunctionalWeights.filtering([[1.0]])
        result = least_favorable_d0eps_filtering_scalar(
            w, 1.0, 1.0, 1.0, white(), grid_size=GRID
        )
        cert = result.certificate
        assert cert["converged"]
        assert cert["residual_noise_relation"] <= 1e-6
        assert cert["residual_signal_relation"] <= 1e-6
        assert cert["alpha_squared"] == pytest.approx(0.25, abs=1e-6)
        assert cert["beta_squared"] == pytest.approx(0.25, abs=1e-6)
        assert result.minimax_mse == pytest.approx(0.5, abs=1e-6)

    def test_symmetric_saddle_margins(self):
        w = FunctionalWeights.filtering([[1.0]])
        result = least_favorable_d0eps_filtering_scalar(
            w, 1.0, 1.0, 1.0, white(), grid_size=GRID
        )
        rng = np.random.default_rng(21)
        samples = sample_d0eps_class(rng, 1.0, 1.0, 1.0, white(), 1, 50)
        report = saddle_point_check(
            result.h0, result.f0, result.g0, samples, w,
            validator=lambda fs, gs: d0eps_class_residual(
                fs, gs, 1.0, 1.0, 1.0, white()
            ),
        )
        assert report.n_rejected == 0
        assert report.min_margin >= -1e-8

    def test_collapsed_noise_class(self):
        w = FunctionalWeights.filtering([[1.0]])
        result = least_favorable_d0eps_filtering_scalar(
            w, 1.0, 1.0, 0.0, white(), grid_size=GRID
        )
        assert result.certificate["converged"]
        vals = evaluate_on_grid(result.g0).values[:, 0, 0]
        np.testing.assert_allclose(vals, 1.0, atol=1e-8)

    def test_zero_weights_degenerate(self):
        w = FunctionalWeights.filtering(np.zeros((1, 1)))
        result = least_favorable_d0eps_filtering_scalar(
            w, 1.0, 1.0, 0.5, white(), grid_size=GRID
        )
        assert result.minimax_mse == pytest.approx(0.0, abs=1e-12)
        assert result.certificate["degenerate"]

    def test_infeasible_class(self):
        w = FunctionalWeights.filtering([[1.0]])
        with pytest.raises(InfeasibleClassError):
            least_favorable_d0eps_filtering_scalar(
                w, 1.0, 0.3, 0.5, white(scale=2.0), grid_size=GRID
            )

    def test_nonconvergence_is_flagged_not_asserted(self):
        w = FunctionalWeights.filtering([[1.0], [0.5]])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = least_favorable_d0eps_filtering_scalar(
                w, 1.0, 1.0, 1.0, white(), grid_size=GRID, max_iter=40
            )
        cert = result.certificate
        if cert["converged"]:
            assert cert["residual_noise_relation"] <= 1e-6
            assert cert["residual_signal_relation"] <= 1e-6
        else:
            assert any("not certified" in str(w.message) for w in caught)

    def test_scalar_only(self):
        w = FunctionalWeights.filtering(np.ones((1, 2)))
        with pytest.raises(ValueError):
            least_favorable_d0eps_filtering_scalar(
                w, 1.0, 1.0, 0.5, white(), grid_size=GRID
            )

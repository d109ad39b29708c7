"""Bound-layer tests: dominance check, closed form, boxes, and grid oracle."""

import numpy as np
import pytest

from fairseal.bounds import (
    check_assumption,
    frechet_cell_intervals,
    minimal_achievable_bound,
    oracle_bound,
    worst_case_bounds,
)
from fairseal.correction import condition_residual
from fairseal.errors import AssumptionViolatedError, DegenerateDenominatorError
from fairseal.estimation import AttributeErrorProfile, ProxyGroupStatistics, profile_from_rates

from oracles import corner_bound, random_assumption_instances, random_stats_and_profile


def stats_of(r, alpha):
    r = np.asarray(r, dtype=float)
    return ProxyGroupStatistics(r, np.asarray(alpha, dtype=float), float(r[0, 1] + r[1, 1]))


@pytest.fixture
def equal_error_instance():
    """Balanced errors: u0 = u1 = 0.02, uniform base rates, tpr gap 0.2."""
    stats = stats_of([[0.25, 0.25], [0.25, 0.25]], [[0.4, 0.5], [0.3, 0.7]])
    return stats, profile_from_rates(0.02, 0.02)


@pytest.fixture
def one_sided_instance():
    """One-sided errors: u0 = 0, u1 = 0.04, equal group conditionals 0.8."""
    stats = stats_of([[0.25, 0.2], [0.25, 0.3]], [[0.3, 0.8], [0.3, 0.8]])
    return stats, profile_from_rates(0.0, 0.04)


class TestCheckAssumption:
    def test_zero_error_profile_always_passes(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            alpha = rng.uniform(0, 1, size=(2, 2))
            stats = stats_of([[0.25, 0.25], [0.25, 0.25]], alpha)
            report = check_assumption(stats, profile_from_rates(0.0, 0.0))
            assert report.passes
            np.testing.assert_allclose(report.margin, np.minimum(alpha, 1 - alpha))

    def test_half_rate_failure(self):
        stats = stats_of([[0.2, 0.4], [0.2, 0.2]], [[0.5, 0.5], [0.5, 0.5]])
        report = check_assumption(stats, profile_from_rates(0.3, 0.0))
        assert not report.half_rate_ok[0][1]  # 0.3 / 0.4 = 0.75 > 1/2
        assert not report.passes

    def test_small_errors_pass(self, equal_error_instance):
        stats, profile = equal_error_instance
        report = check_assumption(stats, profile)
        # u_i / r_ij = 0.08; every conditional sits in [0.08, 0.92]
        assert report.passes
        assert report.half_rate_ok.all()

    def test_margin_nonnegative_implies_half_rate(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            stats, profile = random_stats_and_profile(rng)
            report = check_assumption(stats, profile)
            assert (~(report.margin >= 0) | report.half_rate_ok).all()

    def test_boundary_is_inclusive(self):
        stats = stats_of([[0.25, 0.25], [0.25, 0.25]], [[0.2, 0.2], [0.2, 0.2]])
        report = check_assumption(stats, profile_from_rates(0.05, 0.05))
        assert report.margin.min() == 0
        assert report.passes


class TestWorstCaseBounds:
    def test_equal_error_hand_values(self, equal_error_instance):
        stats, profile = equal_error_instance
        wb = worst_case_bounds(stats, profile)
        assert wb.b[1] == pytest.approx(0.2, abs=1e-12)
        assert wb.c[0, 1] == pytest.approx(0.16, abs=1e-12)
        assert wb.c[1, 1] == pytest.approx(0.16, abs=1e-12)
        assert wb.b_tpr == pytest.approx(0.36, abs=1e-12)
        np.testing.assert_allclose(wb.interval[1], [0.04, 0.36], atol=1e-12)

    def test_zero_error_collapses_to_observed_gap(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            alpha = rng.uniform(0, 1, size=(2, 2))
            r = rng.uniform(0.5, 2, size=(2, 2))
            r /= r.sum()
            stats = stats_of(r, alpha)
            wb = worst_case_bounds(stats, profile_from_rates(0.0, 0.0))
            assert wb.b_tpr == pytest.approx(abs(alpha[1, 1] - alpha[0, 1]), abs=1e-12)
            assert wb.b_fpr == pytest.approx(abs(alpha[1, 0] - alpha[0, 0]), abs=1e-12)

    def test_zero_error_equal_alphas_is_zero(self):
        stats = stats_of([[0.25, 0.25], [0.25, 0.25]], [[0.3, 0.6], [0.3, 0.6]])
        wb = worst_case_bounds(stats, profile_from_rates(0.0, 0.0))
        assert wb.b_tpr == 0
        assert wb.b_fpr == 0

    def test_one_sided_hand_values(self, one_sided_instance):
        stats, profile = one_sided_instance
        wb = worst_case_bounds(stats, profile)
        assert wb.b[1] == pytest.approx(0.256410, abs=1e-6)
        assert wb.c[0, 1] == 0
        assert wb.c[1, 1] == pytest.approx(0.320513, abs=1e-6)
        assert wb.b_tpr == pytest.approx(0.256410, abs=1e-6)

    def test_requires_assumption(self):
        stats = stats_of([[0.25, 0.25], [0.25, 0.25]], [[0.01, 0.5], [0.5, 0.5]])
        with pytest.raises(AssumptionViolatedError) as err:
            worst_case_bounds(stats, profile_from_rates(0.02, 0.02))
        assert (0, 0) in err.value.report.failing_cells()

    def test_degenerate_denominator(self):
        stats = stats_of([[0.04, 0.46], [0.04, 0.46]], [[0.5, 0.5], [0.5, 0.5]])
        profile = AttributeErrorProfile(0.0, 0.05)  # r[0][0] - delta_u = -0.01
        with pytest.raises(DegenerateDenominatorError):
            minimal_achievable_bound(stats, profile, 0)

    def test_soundness_on_random_joints(self):
        """The certified bound dominates the true violation on exact joints."""
        rng = np.random.default_rng(3)
        for joint in random_assumption_instances(rng, 300):
            wb = worst_case_bounds(joint.stats(), joint.profile())
            delta_tpr, delta_fpr = joint.true_deltas()
            assert abs(delta_tpr) <= wb.b_tpr + 1e-12
            assert abs(delta_fpr) <= wb.b_fpr + 1e-12

    def test_bound_exceeds_minimal_by_condition_residual(self):
        """b_side - minimal equals |residual| exactly on every instance."""
        rng = np.random.default_rng(4)
        for _ in range(200):
            stats, profile = random_stats_and_profile(rng)
            wb = worst_case_bounds(stats, profile)
            for side in (0, 1):
                gap = wb.side(side) - minimal_achievable_bound(stats, profile, side)
                assert gap >= -1e-12
                assert gap == pytest.approx(abs(condition_residual(stats, profile, side)), abs=1e-9)


class TestMinimalAchievableBound:
    def test_balanced_example(self, equal_error_instance):
        stats, profile = equal_error_instance
        assert minimal_achievable_bound(stats, profile, 1) == pytest.approx(0.16, abs=1e-12)

    def test_zero_error(self):
        stats = stats_of([[0.25, 0.25], [0.25, 0.25]], [[0.3, 0.6], [0.3, 0.6]])
        assert minimal_achievable_bound(stats, profile_from_rates(0.0, 0.0), 1) == 0

    def test_one_sided_example(self, one_sided_instance):
        stats, profile = one_sided_instance
        assert minimal_achievable_bound(stats, profile, 1) == pytest.approx(0.160256, abs=1e-6)


class TestFrechetCellIntervals:
    def test_zero_error_collapses_to_points(self):
        stats = stats_of([[0.2, 0.3], [0.25, 0.25]], [[0.3, 0.8], [0.2, 0.7]])
        box = frechet_cell_intervals(stats, profile_from_rates(0.0, 0.0), 1)
        np.testing.assert_allclose(box.lo, box.hi, atol=1e-15)

    def test_width_bounded_by_error_mass(self, equal_error_instance):
        stats, profile = equal_error_instance
        for side in (0, 1):
            box = frechet_cell_intervals(stats, profile, side)
            for i in (0, 1):
                cap = profile.u / stats.p_a_hat(i)
                assert (box.hi[:, i] - box.lo[:, i] <= cap + 1e-12).all()

    def test_lower_limit_clamps_at_zero(self):
        # Group 0 with tiny P(A=1 | A_hat=0): the subtraction goes negative.
        stats = stats_of([[0.3, 0.2], [0.2, 0.3]], [[0.3, 0.7], [0.3, 0.7]])
        box = frechet_cell_intervals(stats, profile_from_rates(0.01, 0.01), 1)
        assert box.lo[1, 0] == 0.0

    def test_requires_assumption(self):
        stats = stats_of([[0.25, 0.25], [0.25, 0.25]], [[0.01, 0.5], [0.5, 0.5]])
        with pytest.raises(AssumptionViolatedError):
            frechet_cell_intervals(stats, profile_from_rates(0.02, 0.02), 1)


class TestOracleBound:
    def test_equal_error_instance(self, equal_error_instance):
        stats, profile = equal_error_instance
        assert oracle_bound(stats, profile, 1, 1e-3) == pytest.approx(0.36, abs=1e-3)

    def test_zero_error_is_exact_single_point(self):
        stats = stats_of([[0.2, 0.3], [0.25, 0.25]], [[0.3, 0.8], [0.2, 0.7]])
        assert oracle_bound(stats, profile_from_rates(0.0, 0.0), 1) == pytest.approx(0.1, abs=1e-12)

    def test_one_sided_instance(self, one_sided_instance):
        stats, profile = one_sided_instance
        assert oracle_bound(stats, profile, 1, 1e-3) == pytest.approx(0.2564, abs=1e-3)

    def test_agrees_with_closed_form_on_random_instances(self):
        rng = np.random.default_rng(5)
        for _ in range(6):
            stats, profile = random_stats_and_profile(rng)
            wb = worst_case_bounds(stats, profile)
            for side in (0, 1):
                grid = oracle_bound(stats, profile, side, 2e-3)
                assert abs(grid - wb.side(side)) <= 2 * 2e-3

    def test_consistency_flag_never_raises_the_maximum(self, equal_error_instance):
        stats, profile = equal_error_instance
        free = oracle_bound(stats, profile, 1, 5e-3)
        constrained = oracle_bound(stats, profile, 1, 5e-3, enforce_consistency=True)
        assert constrained <= free + 1e-12

    def test_resolution_validation(self, equal_error_instance):
        stats, profile = equal_error_instance
        with pytest.raises(ValueError):
            oracle_bound(stats, profile, 1, 0.5)


class TestCornerOracle:
    def test_corner_evaluation_matches_closed_form(self):
        """The box corners attain the closed-form bound exactly."""
        rng = np.random.default_rng(6)
        for _ in range(200):
            stats, profile = random_stats_and_profile(rng)
            wb = worst_case_bounds(stats, profile)
            for side in (0, 1):
                assert corner_bound(stats, profile, side) == pytest.approx(wb.side(side), abs=1e-10)

    def test_interval_endpoints_are_extremal_plugins(self):
        """hi comes from (positives at max, negatives at min); lo the reverse."""
        rng = np.random.default_rng(7)
        for _ in range(50):
            stats, profile = random_stats_and_profile(rng)
            wb = worst_case_bounds(stats, profile)
            for side in (0, 1):
                from fairseal.bounds import delta_from_cells, frechet_cell_intervals

                box = frechet_cell_intervals(stats, profile, side)
                hi = delta_from_cells(
                    stats, side, (box.hi[1, 0], box.hi[1, 1]), (box.lo[0, 0], box.lo[0, 1])
                )
                lo = delta_from_cells(
                    stats, side, (box.lo[1, 0], box.lo[1, 1]), (box.hi[0, 0], box.hi[0, 1])
                )
                np.testing.assert_allclose([lo, hi], wb.interval[side], atol=1e-10)

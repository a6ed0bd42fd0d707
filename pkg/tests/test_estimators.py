import math

import numpy as np
import pytest
from scipy.special import ndtr

from bincdf.binned import BinnedTable, to_cumulative, validate_table
from bincdf.errors import ValidationError
from bincdf.estimators import (
    KernelCdf,
    LinearCdf,
    StepCdf,
    EstimatorReport,
    ecdf_estimator,
    heuristic_stats,
    kernel_estimator,
    linear_quantile,
    midpoints,
    pareto_tail,
    rcfp_estimator,
)
from bincdf.spline import fit
from conftest import fuzz_table

JAN = validate_table([0, 6, 16, 180], [80.9, 11.3, 7.8], units="percent")
DISTANCE_ALL = validate_table(
    [0, 5, 10, 25, 50, 100], [27.5, 22.6, 30.1, 14.6, 5.2], units="percent"
)


class TestMidpoints:
    def test_simple(self):
        np.testing.assert_allclose(midpoints(validate_table([0, 2, 4], [1, 1])), [1, 3])

    def test_delay_edges(self):
        np.testing.assert_allclose(midpoints(JAN), [3, 11, 98])

    def test_distance_edges(self):
        np.testing.assert_allclose(
            midpoints(DISTANCE_ALL), [2.5, 7.5, 17.5, 37.5, 75]
        )

    def test_open_ended_rejected(self):
        with pytest.raises(ValidationError, match="open-ended"):
            midpoints(validate_table([0, 1, 2, np.inf], [1, 1, 1]))


class TestLinearQuantile:
    def test_distance_median(self):
        # independent arithmetic: lower + (q - below)/share * width
        want = 5.0 + (0.5 - 0.275) / 0.226 * 5.0
        got = linear_quantile(DISTANCE_ALL, 0.5)
        assert abs(got - want) <= 1e-12
        assert abs(got - 9.9779) <= 1e-3

    def test_zero_class_resolves_to_lower_boundary(self):
        table = BinnedTable([0, 1, 2, 3], [0.5, 0.0, 0.5])
        assert linear_quantile(table, 0.5) == 1.0

    def test_extremes(self):
        assert linear_quantile(JAN, 0.0) == 0.0
        assert linear_quantile(JAN, 1.0) == 180.0

    def test_level_validated(self):
        with pytest.raises(ValidationError, match="outside"):
            linear_quantile(JAN, -0.1)


class TestHeuristicStats:
    def test_symmetric_two_bins(self):
        rep = heuristic_stats(validate_table([0, 2, 4], [10, 10]))
        assert rep.mean == 2.0
        assert rep.quantiles[1] == 2.0

    def test_delay_midpoint_mean(self):
        rep = heuristic_stats(JAN)
        want = 3 * 0.809 + 11 * 0.113 + 98 * 0.078
        assert abs(rep.mean - want) <= 1e-12
        assert abs(rep.mean - 11.314) <= 1e-12

    def test_population_sd_default(self):
        rep = heuristic_stats(validate_table([0, 2, 4], [10, 10]))
        assert rep.sd == 1.0  # midpoints 1 and 3, equal mass

    def test_sample_sd_needs_total(self):
        with pytest.raises(ValidationError, match="total"):
            heuristic_stats(JAN, population_sd=False)
        rep = heuristic_stats(
            validate_table([0, 2, 4], [10, 10]), population_sd=False
        )
        assert rep.sd == pytest.approx(math.sqrt(20.0 / 19.0))

    def test_open_top_uses_pareto_point(self):
        table = validate_table([0, 25, 50, np.inf], [55, 30, 15])
        rep = heuristic_stats(table)
        tail = pareto_tail(table)
        want = 0.55 * 12.5 + 0.30 * 37.5 + 0.15 * tail.rpme_point
        assert abs(rep.mean - want) <= 1e-12
        assert rep.metadata["tail_point"] == tail.rpme_point

    def test_iqr_is_quartile_spread(self, rng):
        for _ in range(50):
            table = fuzz_table(rng)
            rep = heuristic_stats(table)
            assert abs(rep.iqr - (rep.quantiles[2] - rep.quantiles[0])) <= 1e-12


class TestParetoTail:
    def test_analytic_case(self):
        table = BinnedTable([5, 25, 50, 100], [40, 30, 10])
        tail = pareto_tail(table)
        assert tail.gamma_hat == math.log(4.0) / math.log(2.0)
        assert tail.pme_point == pytest.approx(100.0)
        assert tail.rpme_point == pytest.approx(75.0)

    def test_equal_tail_counts_ratio_e(self):
        table = BinnedTable([1.0, 2.0, 2.0 * math.e, 20.0], [10, 7, 7])
        tail = pareto_tail(table)
        assert tail.gamma_hat == pytest.approx(math.log(2.0), rel=1e-12)

    def test_distance_table(self):
        tail = pareto_tail(DISTANCE_ALL)
        want = math.log((14.6 + 5.2) / 5.2) / math.log(50.0 / 25.0)
        assert tail.gamma_hat == pytest.approx(want, rel=1e-12)
        assert tail.rpme_point == pytest.approx(75.92, abs=5e-3)

    def test_shape_at_most_one_has_no_arithmetic_point(self):
        # heavy tail: shape estimate below 1
        table = BinnedTable([1, 2, 4, 8], [10, 10, 30])
        tail = pareto_tail(table)
        assert tail.gamma_hat < 1.0
        assert tail.pme_point is None
        assert tail.rpme_point > 0.0

    def test_preconditions(self):
        with pytest.raises(ValidationError, match="three classes"):
            pareto_tail(BinnedTable([0, 1, 2], [1, 1]))
        with pytest.raises(ValidationError, match="top class"):
            pareto_tail(BinnedTable([1, 2, 4, 8], [1, 1, 0]))
        with pytest.raises(ValidationError, match="positive"):
            pareto_tail(BinnedTable([-1, 0, 2, 4], [1, 1, 1]))

    def test_scale_invariance(self, rng):
        for _ in range(50):
            table = fuzz_table(rng)
            if table.r < 3 or table.counts[-1] <= 0 or table.counts[-2] <= 0:
                continue
            k = float(rng.uniform(0.5, 20.0))
            scaled = BinnedTable(table.edges * k, table.counts, n=table.n)
            a = pareto_tail(table).gamma_hat
            b = pareto_tail(scaled).gamma_hat
            assert a == pytest.approx(b, rel=1e-9)


class TestStepCdf:
    def test_single_bin_point_mass(self):
        rep = ecdf_estimator(validate_table([0, 1], [5]))
        assert rep.quantiles == (1.0, 1.0, 1.0)
        assert rep.mean == 1.0
        assert rep.sd == 0.0

    def test_four_equal_bins(self):
        rep = ecdf_estimator(validate_table([0, 0.25, 0.5, 0.75, 1], [1, 1, 1, 1]))
        assert rep.quantiles[0] == 0.25
        assert rep.quantiles[1] == 0.5

    def test_delay_iqr_zero(self):
        rep = ecdf_estimator(JAN)
        assert rep.quantiles == (6.0, 6.0, 6.0)
        assert rep.iqr == 0.0

    def test_quantiles_live_on_edges(self, rng):
        for _ in range(50):
            table = fuzz_table(rng)
            step = StepCdf(table)
            for q in rng.uniform(0.0, 1.0, 7):
                assert step.quantile(q) in table.edges[1:]

    def test_cdf_steps(self):
        step = StepCdf(JAN)
        assert step.cdf(5.999) == 0.0
        assert step.cdf(6.0) == pytest.approx(0.809)
        assert step.cdf(200.0) == 1.0


class TestKernelCdf:
    def test_far_tail_reaches_one(self):
        kern = KernelCdf(JAN)
        tau = 180.0 + 20.0 * kern.bandwidth
        assert kern.cdf(tau) >= 1.0 - 1e-9

    def test_symmetric_mean_preserved(self):
        rep = kernel_estimator(validate_table([0, 2, 4], [10, 10]))
        assert rep.mean == pytest.approx(2.0)

    def test_matches_brute_force_pseudo_sample(self):
        table = validate_table([0.0, 1.0, 2.0, 4.0], [3, 5, 2])
        kern = KernelCdf(table)
        mids = [0.5, 1.5, 3.0]
        reps = [3, 5, 2]
        sample = [m for m, r in zip(mids, reps) for _ in range(r)]
        grid = np.linspace(-2.0, 8.0, 200)
        brute = np.array(
            [sum(ndtr((t - x) / kern.bandwidth) for x in sample) / 10.0 for t in grid]
        )
        np.testing.assert_allclose(kern.cdf(grid), brute, atol=1e-12)

    def test_zero_bandwidth_rejected(self):
        with pytest.raises(ValidationError, match="bandwidth"):
            kernel_estimator(JAN, bandwidth=0.0)

    def test_degenerate_table_falls_back_to_bin_width(self):
        table = BinnedTable([0.0, 2.0, 4.0, 6.0], [0.0, 7.0, 0.0])
        kern = KernelCdf(table)
        assert kern.degenerate
        assert kern.bandwidth == 0.5  # occupied width 2 over 4
        rep = kernel_estimator(table)
        assert rep.metadata["degenerate_fallback"] is True

    def test_cdf_monotone_on_grid(self, rng):
        for _ in range(20):
            table = fuzz_table(rng)
            kern = KernelCdf(table)
            grid = np.linspace(table.edges[0] - 5.0, table.edges[-1] + 5.0, 101)
            assert (np.diff(kern.cdf(grid)) >= -1e-15).all()

    def test_sd_adds_smoothing_variance(self):
        table = validate_table([0, 2, 4], [10, 10])
        kern = KernelCdf(table, bandwidth=0.7)
        assert kern.sd == pytest.approx(math.sqrt(1.0 + 0.49))

    def test_report_metadata(self):
        rep = kernel_estimator(JAN, nominal_n=500)
        assert rep.metadata["pseudo_n"] == 500.0
        assert rep.metadata["kernel"] == "gaussian"
        assert rep.metadata["bandwidth"] > 0.0


class TestLinearCdf:
    def test_matches_spline_on_linear_data(self):
        curve = to_cumulative(validate_table([0, 0.25, 0.5, 0.75, 1], [1, 1, 1, 1]))
        lin = LinearCdf(curve)
        s = fit(curve)
        grid = np.linspace(0.0, 1.0, 41)
        np.testing.assert_allclose(lin.cdf(grid), s.cdf(grid), atol=1e-12)
        for q in (0.25, 0.5, 0.75):
            assert lin.quantile(q) == pytest.approx(s.quantile(q), abs=1e-9)

    def test_distance_median_equals_interpolation_formula(self):
        rep = rcfp_estimator(to_cumulative(DISTANCE_ALL))
        assert rep.quantiles[1] == pytest.approx(
            linear_quantile(DISTANCE_ALL, 0.5), abs=1e-12
        )
        assert rep.quantiles[1] == pytest.approx(9.9779, abs=1e-3)

    def test_delay_mean_is_midpoint_mass_sum(self):
        rep = rcfp_estimator(to_cumulative(JAN))
        assert rep.mean == pytest.approx(11.314, abs=1e-12)

    def test_quantiles_match_heuristic_everywhere(self, rng):
        for _ in range(100):
            table = fuzz_table(rng)
            lin = LinearCdf(to_cumulative(table))
            for q in rng.uniform(0.0, 1.0, 9):
                assert abs(lin.quantile(q) - linear_quantile(table, q)) <= 1e-10

    def test_pdf_piecewise_constant(self):
        lin = LinearCdf(to_cumulative(JAN))
        assert lin.pdf(3.0) == pytest.approx(0.809 / 6.0)
        assert lin.pdf(300.0) == 0.0


class TestReportContract:
    def test_decreasing_quantiles_rejected(self):
        with pytest.raises(ValidationError, match="decrease"):
            EstimatorReport(
                method="X",
                q_levels=(0.25, 0.75),
                quantiles=(2.0, 1.0),
                mean=0.0,
                sd=1.0,
                iqr=1.0,
            )

    def test_all_estimators_share_contract(self, rng):
        levels = (0.1, 0.25, 0.5, 0.75, 0.9)
        for _ in range(25):
            table = fuzz_table(rng)
            curve = to_cumulative(table)
            reports = [
                heuristic_stats(table, levels),
                ecdf_estimator(table, levels),
                kernel_estimator(table, levels),
                rcfp_estimator(curve, levels),
            ]
            for rep in reports:
                assert rep.q_levels == levels
                diffs = np.diff(rep.quantiles)
                assert (diffs >= -1e-12).all()
                assert abs(rep.iqr - (rep.quantiles[3] - rep.quantiles[1])) <= 1e-12
                assert rep.sd >= 0.0

    def test_to_dict_shape(self):
        doc = heuristic_stats(JAN).to_dict()
        assert doc["method"] == "H"
        assert set(doc["quantiles"]) == {"q25", "q50", "q75"}
        assert "metadata" in doc

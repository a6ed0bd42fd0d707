import json

import numpy as np
import pytest

from bincdf.distributions import parse_spec
from bincdf.errors import ValidationError
from bincdf.simulate import (
    METHOD_ORDER,
    SimConfig,
    make_edges,
    paired_differences,
    replicate_seed,
    run_replicate,
    run_study,
    summarize,
    true_values,
)

NORMAL = parse_spec("normal:3,1@0:10")
SMALL = SimConfig(distributions=(NORMAL,), n=100, replicates=5, master_seed=99)


class TestSeeding:
    def test_deterministic(self):
        assert replicate_seed(7, 1, 2) == replicate_seed(7, 1, 2)

    def test_cells_are_distinct(self):
        seeds = {
            replicate_seed(7, di, ri) for di in range(8) for ri in range(200)
        }
        assert len(seeds) == 8 * 200

    def test_order_of_indices_matters(self):
        assert replicate_seed(7, 0, 1) != replicate_seed(7, 1, 0)


class TestMakeEdges:
    def test_unit_range_six_cuts(self):
        spec = parse_spec("triangular:0,1,0.5@0:1")
        edges = make_edges(spec, 6)
        np.testing.assert_allclose(edges, np.arange(8) / 7.0, atol=1e-15)
        assert len(edges) - 1 == 7  # seven classes

    def test_single_cut(self):
        edges = make_edges(NORMAL, 1)
        np.testing.assert_allclose(edges, [0.0, 5.0, 10.0])

    def test_wide_range_spacing(self):
        spec = parse_spec("gev:1,2,0@-4:35")
        edges = make_edges(spec, 6)
        np.testing.assert_allclose(np.diff(edges), np.full(7, 39.0 / 7.0), atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValidationError, match=">= 1"):
            make_edges(NORMAL, 0)


class TestRunReplicate:
    def test_five_reports(self):
        reports = run_replicate(NORMAL, SMALL, 0)
        assert set(reports) == {"D", "S", "H", "E", "K"}
        for rep in reports.values():
            assert rep.q_levels == (0.25, 0.5, 0.75)

    def test_direct_median_near_truth(self):
        config = SimConfig(distributions=(NORMAL,), n=1000, replicates=1, master_seed=4)
        reports = run_replicate(NORMAL, config, 0)
        assert abs(reports["D"].quantiles[1] - 3.0) <= 0.15

    def test_bitwise_repeatable(self):
        a = run_replicate(NORMAL, SMALL, 3)
        b = run_replicate(NORMAL, SMALL, 3)
        for method in METHOD_ORDER:
            assert a[method].quantiles == b[method].quantiles
            assert a[method].mean == b[method].mean
            assert a[method].sd == b[method].sd

    def test_binned_quantiles_inside_range(self):
        reports = run_replicate(NORMAL, SMALL, 1)
        for method in ("S", "H", "E"):
            for v in reports[method].quantiles:
                assert 0.0 <= v <= 10.0


class TestPairedDifferences:
    def test_zero_when_equal(self):
        truth = true_values(NORMAL, (0.25, 0.5, 0.75))
        rep = run_replicate(NORMAL, SMALL, 0)["D"]
        est_truth = {
            "q25": rep.quantiles[0],
            "q50": rep.quantiles[1],
            "q75": rep.quantiles[2],
            "mean": rep.mean,
            "sd": rep.sd,
        }
        diff = paired_differences(est_truth, rep)
        assert all(v == 0.0 for v in diff.values())
        assert set(diff) == set(truth)

    def test_sign_convention(self):
        from bincdf.estimators import EstimatorReport

        rep = EstimatorReport(
            method="X", q_levels=(0.5,), quantiles=(2.8,), mean=0.0, sd=1.0, iqr=0.0
        )
        diff = paired_differences({"q50": 3.0, "mean": 0.0, "sd": 1.0}, rep)
        assert diff["q50"] == pytest.approx(0.2)

    def test_level_mismatch(self):
        from bincdf.estimators import EstimatorReport

        rep = EstimatorReport(
            method="X", q_levels=(0.5,), quantiles=(2.8,), mean=0.0, sd=1.0, iqr=0.0
        )
        with pytest.raises(ValidationError, match="missing"):
            paired_differences({"q10": 1.0, "mean": 0.0, "sd": 1.0}, rep)


class TestSummaries:
    def test_constant_vector_five_numbers(self):
        summary = summarize(
            SimConfig(distributions=(NORMAL,), n=100, replicates=3, master_seed=1),
            {
                (0, ri): {m: {k: 0.5 for k in ("q25", "q50", "q75", "mean", "sd")}
                          for m in METHOD_ORDER}
                for ri in range(3)
            },
        )
        five = summary.five_number(NORMAL.label(), "S", "q50")
        assert set(five.values()) == {0.5}

    def test_single_replicate_summary_is_the_replicate(self):
        config = SimConfig(distributions=(NORMAL,), n=100, replicates=1, master_seed=12)
        summary = run_study(config)
        truth = true_values(NORMAL, config.q_levels)
        reports = run_replicate(NORMAL, config, 0)
        expect = paired_differences(truth, reports["H"])
        for metric, value in expect.items():
            vec = summary.vector(NORMAL.label(), "H", metric)
            assert vec.shape == (1,)
            assert vec[0] == value
            assert summary.five_number(NORMAL.label(), "H", metric)["median"] == value

    def test_csv_shape(self):
        import csv as _csv
        import io as _io

        summary = run_study(SMALL)
        text = summary.to_csv_text()
        rows = list(_csv.reader(_io.StringIO(text)))
        assert rows[0] == ["distribution", "method", "metric", "replicate", "delta"]
        assert len(rows) == 1 + 1 * 5 * 5 * 5  # dists*methods*metrics*reps
        assert rows[1][0] == NORMAL.label()
        assert rows[1][1] == "D"
        float(rows[1][4])  # parseable delta

    def test_json_summary_contains_all_cells(self):
        summary = run_study(SMALL)
        doc = summary.to_json_dict()
        assert set(doc["summaries"]) == {NORMAL.label()}
        assert set(doc["summaries"][NORMAL.label()]) == set(METHOD_ORDER)
        cell = doc["summaries"][NORMAL.label()]["S"]["q50"]
        assert {"min", "q1", "median", "q3", "max", "median_abs"} <= set(cell)


class TestEndToEnd:
    def test_manual_pipeline_reproduces_study_cell(self):
        # independent re-implementation of one replicate's ordering:
        # draw, bin, fit, invert, difference - no harness code involved
        from bincdf.binned import bin_sample, to_cumulative
        from bincdf.distributions import sample
        from bincdf.simulate import make_edges, replicate_seed
        from bincdf.spline import fit

        config = SimConfig(distributions=(NORMAL,), n=1000, replicates=3,
                           master_seed=314)
        summary = run_study(config)
        for ri in range(3):
            seed = replicate_seed(314, 0, ri)
            values = sample(NORMAL, 1000, seed)
            curve = to_cumulative(bin_sample(values, make_edges(NORMAL, 6)))
            s = fit(curve)
            manual_delta = NORMAL.quantile(0.5) - s.quantile(0.5)
            assert summary.vector(NORMAL.label(), "S", "q50")[ri] == manual_delta

    def test_full_protocol_shape(self):
        # both sample sizes over the four families: one summary per size,
        # five methods by five metrics per distribution
        dists = (
            "normal:3,1@0:10", "gamma:1,2@0:8",
            "gev:1,2,0@-4:35", "triangular:0,1,0.5@0:1",
        )
        summaries = [
            run_study(SimConfig(distributions=dists, n=n, replicates=2,
                                master_seed=3))
            for n in (100, 1000)
        ]
        assert len(summaries) == 2
        for summary in summaries:
            doc = summary.to_json_dict()
            assert len(doc["summaries"]) == 4
            for per_dist in doc["summaries"].values():
                assert set(per_dist) == set(METHOD_ORDER)
                for per_method in per_dist.values():
                    assert set(per_method) == {"q25", "q50", "q75", "mean", "sd"}


class TestDeterminism:
    def test_rerun_identical(self):
        a = run_study(SMALL).to_csv_text()
        b = run_study(SMALL).to_csv_text()
        assert a == b

    def test_parallel_equals_serial(self):
        config = SimConfig(
            distributions=("normal:3,1@0:10", "triangular:0,1,0.5@0:1"),
            n=100,
            replicates=6,
            master_seed=21,
        )
        serial = run_study(config, workers=1).to_csv_text()
        parallel = run_study(config, workers=3).to_csv_text()
        assert serial == parallel


class TestConfig:
    def test_from_dict_validates_fields(self):
        with pytest.raises(ValidationError, match="unknown config fields"):
            SimConfig.from_dict({"distributions": ["normal:3,1@0:10"], "reps": 3})
        with pytest.raises(ValidationError, match="missing 'distributions'"):
            SimConfig.from_dict({"n": 100})
        with pytest.raises(ValidationError, match="replicates"):
            SimConfig.from_dict({"distributions": ["normal:3,1@0:10"], "replicates": 0})
        with pytest.raises(ValidationError, match="cut_points"):
            SimConfig(distributions=(NORMAL,), cut_points=1)

    def test_from_json_file(self, tmp_path):
        path = tmp_path / "study.json"
        path.write_text(json.dumps({
            "distributions": ["normal:3,1@0:10"],
            "n": 120,
            "replicates": 4,
            "master_seed": 5,
        }))
        config = SimConfig.from_file(path)
        assert config.n == 120 and config.replicates == 4

    def test_from_toml_file(self, tmp_path):
        path = tmp_path / "study.toml"
        path.write_text(
            'distributions = ["normal:3,1@0:10", "gamma:1,2@0:8"]\n'
            "n = 150\nreplicates = 3\nmaster_seed = 9\n"
        )
        config = SimConfig.from_file(path)
        assert len(config.distributions) == 2
        assert config.distributions[1].family == "gamma"

    def test_default_protocol_shape(self):
        config = SimConfig(
            distributions=(
                "normal:3,1@0:10", "gamma:1,2@0:8",
                "gev:1,2,0@-4:35", "triangular:0,1,0.5@0:1",
            ),
        )
        assert config.replicates == 1000
        assert config.cut_points == 6
        assert config.metrics == ("q25", "q50", "q75", "mean", "sd")

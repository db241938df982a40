import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from energyreduce.errors import AlgorithmSetMismatch, ZeroVarianceTargetWarning
from energyreduce.harness import (
    MetricSet,
    RoundReport,
    compare_rounds,
    compute_metrics,
    emit_reports,
    fmt,
    metric_table,
    run_round,
)
from energyreduce.ingest import align
from energyreduce.regressors import ModelSpec
from energyreduce.synth import SynthConfig, generate
from energyreduce.windows import WindowSpec, drop_variable

GOLDEN = Path(__file__).parent / "golden"


def report_with(round_id, runs):
    return RoundReport(round_id, list(runs), {a: [MetricSet(**m) for m in ms] for a, ms in runs.items()})


class TestMetrics:
    def test_perfect(self):
        m = compute_metrics([1.0, 2.0, 5.0], [1.0, 2.0, 5.0])
        assert (m.mse, m.rmse, m.mae, m.r2) == (0.0, 0.0, 0.0, 1.0)

    def test_hand_example(self):
        m = compute_metrics([1, 2, 3], [2, 2, 2])
        assert (m.mse, m.rmse, m.mae, m.r2) == pytest.approx((0.6667, 0.8165, 0.6667, 0.0), abs=1e-4)

    def test_mean_predictor_scores_zero(self):
        y = np.array([3.0, 7.0, 11.0, 2.0])
        assert compute_metrics(y, np.full(4, y.mean())).r2 == 0.0

    def test_constant_target(self):
        with pytest.warns(ZeroVarianceTargetWarning):
            m = compute_metrics([4.0, 4.0], [3.0, 5.0])
        assert math.isnan(m.r2) and m.mse == 1.0

    @pytest.mark.parametrize("y, y_hat", [([], []), ([1.0], [1.0, 2.0])])
    def test_bad_lengths(self, y, y_hat):
        with pytest.raises(ValueError):
            compute_metrics(y, y_hat)

    @settings(max_examples=100)
    @given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)), min_size=2, max_size=50))
    def test_identities(self, pairs):
        y = np.array([p[0] for p in pairs])
        y_hat = np.array([p[1] for p in pairs])
        if np.ptp(y) < 1e-3:
            return
        m = compute_metrics(y, y_hat)
        assert m.mse >= 0 and m.mae >= 0 and m.r2 <= 1.0
        assert m.rmse ** 2 == pytest.approx(m.mse, rel=1e-12, abs=1e-300)
        # absolute 1e-9, loosened to 1e-12 relative where R² is far below zero
        assert m.r2 == pytest.approx(1.0 - m.mse / y.var(), rel=1e-12, abs=1e-9)


@pytest.fixture(scope="module")
def frame():
    return align(generate(SynthConfig(duration=1500, seed=3)))


DETERMINISTIC = [ModelSpec(a) for a in ("ols", "ridge", "lasso", "knn")]


class TestRounds:
    def test_single_repetition_has_zero_spread(self, frame):
        rep = run_round(frame, WindowSpec(), [ModelSpec("ols"), ModelSpec("svr", {"epochs": 3})], 1)
        for a in rep.algorithms:
            assert rep.std(a) == MetricSet(0.0, 0.0, 0.0, 0.0)

    def test_deterministic_models_have_zero_spread(self, frame):
        rep = run_round(frame, WindowSpec(), DETERMINISTIC, repetitions=3, seed=4)
        for a in rep.algorithms:
            assert rep.std(a) == MetricSet(0.0, 0.0, 0.0, 0.0)
            assert len(set(rep.runs[a])) == 1

    def test_stochastic_models_vary_by_repetition(self, frame):
        rep = run_round(frame, WindowSpec(), [ModelSpec("mlp_simple", {"epochs": 2})], repetitions=2)
        a, b = rep.runs["mlp_simple"]
        assert a != b

    def test_worker_count_does_not_matter(self, frame):
        specs = DETERMINISTIC + [ModelSpec("svr", {"epochs": 3})]
        one = run_round(frame, WindowSpec(), specs, 2, seed=1, workers=1)
        many = run_round(frame, WindowSpec(), specs, 2, seed=1, workers=4)
        assert one.to_dict() == many.to_dict()

    def test_report_dict_round_trip(self, frame):
        rep = run_round(frame, WindowSpec(), [ModelSpec("ols")], 2)
        back = RoundReport.from_dict(rep.to_dict())
        assert back.to_dict() == rep.to_dict()


class TestCompare:
    def test_identity_is_zero(self):
        rep = report_with("full", {"ols": [dict(mse=1.3, rmse=1.14, mae=0.9, r2=0.9)] * 2})
        diff = compare_rounds(rep, rep)
        assert diff.mean["ols"] == MetricSet(0.0, 0.0, 0.0, 0.0)
        assert diff.std["ols"] == MetricSet(0.0, 0.0, 0.0, 0.0)

    def test_sign_convention(self):
        full = report_with("full", {"ols": [dict(mse=1.30, rmse=1.0, mae=1.0, r2=0.90)]})
        reduced = report_with("reduced", {"ols": [dict(mse=1.29, rmse=1.0, mae=1.0, r2=0.92)]})
        d = compare_rounds(full, reduced).mean["ols"]
        assert d.r2 == pytest.approx(0.02, abs=1e-12)
        assert d.mse == pytest.approx(0.01, abs=1e-12)

    def test_std_diff_positive_when_reduced_is_tighter(self):
        full = report_with("full", {"mlp": [dict(mse=1, rmse=1, mae=1, r2=0.5), dict(mse=3, rmse=3, mae=3, r2=0.7)]})
        reduced = report_with("reduced", {"mlp": [dict(mse=2, rmse=2, mae=2, r2=0.6)] * 2})
        d = compare_rounds(full, reduced).std["mlp"]
        assert d.mse == 1.0 and d.r2 == pytest.approx(0.1)

    def test_mismatch(self):
        a = report_with("full", {"ols": [dict(mse=1, rmse=1, mae=1, r2=0)]})
        b = report_with("reduced", {"knn": [dict(mse=1, rmse=1, mae=1, r2=0)]})
        with pytest.raises(AlgorithmSetMismatch):
            compare_rounds(a, b)


class TestEmit:
    def test_header_only(self):
        assert metric_table([], {}, "md") == "| Algorithms | R² | MSE | RMSE | MAE |\n|---|---|---|---|---|\n"

    def test_exact_row(self):
        table = {"ols": MetricSet(mse=1.2345678, rmse=1.1111, mae=0.5, r2=0.91204)}
        row = metric_table(["ols"], table, "md").splitlines()[2]
        assert row == "| Ordinary Least Squares | 0.9120 | 1.2346 | 1.1111 | 0.5000 |"

    def test_csv_row(self):
        table = {"knn": MetricSet(mse=2.0, rmse=math.sqrt(2), mae=1.0, r2=-0.2087)}
        assert metric_table(["knn"], table, "csv").splitlines() == [
            "Algorithms,R2,MSE,RMSE,MAE",
            "K Nearest Neighbors,-0.2087,2.0000,1.4142,1.0000",
        ]

    @pytest.mark.parametrize("value, text", [(-0.00001, "0.0000"), (0.00005, "0.0001"), (-1.5, "-1.5000")])
    def test_fmt(self, value, text):
        assert fmt(value) == text

    def test_files_written(self, tmp_path):
        rep = report_with("full", {"ols": [dict(mse=1, rmse=1, mae=1, r2=0.5)]})
        paths = emit_reports(tmp_path, full=rep, reduced=rep, formats=["md"], timing=False)
        assert sorted(p.name for p in paths) == sorted(
            f"{s}.md" for s in ("table2_full_avg", "table3_reduced_avg", "table4_full_std",
                                "table5_reduced_std", "table6_diff_avg", "table7_diff_std"))


def golden_run(out):
    frame = align(generate(SynthConfig(duration=2000, seed=7)))
    models = [ModelSpec(a) for a in ("ols", "ridge", "lasso", "knn", "tree")]
    full = run_round(frame, WindowSpec(), models, 2, seed=7, round_id="full")
    reduced = run_round(frame, drop_variable(WindowSpec(), "humidity"), models, 2, seed=7, round_id="reduced")
    return emit_reports(out, full=full, reduced=reduced, formats=["md"], timing=False)


def test_golden_tables(tmp_path):
    for path in golden_run(tmp_path):
        expected = (GOLDEN / path.name).read_text(encoding="utf-8")
        assert path.read_text(encoding="utf-8") == expected, path.name

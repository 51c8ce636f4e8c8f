"""Tests for rank reports, confidence analysis and report files."""

import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from cactus.abstraction import AbstractionMap
from cactus.classifier import ClassificationResult, ClassScores, SignificanceProfile
from cactus.errors import ConfigError
from cactus.explain import (
    ConfidenceConfig,
    confidence_analysis,
    emit_reports,
    feature_rank,
    flip_rank,
    flip_ranks,
    rank_report,
    select_metric_by_coverage,
)
from cactus.models import FeatureKind, Metric


def make_profile(cpb_sigma, features=("c", "d")):
    """Profile over binary categorical features, the same sigma for every metric."""
    amap = AbstractionMap.build(
        source_features=list(features),
        kinds={name: FeatureKind.CATEGORICAL for name in features},
        cutoffs={},
        categorical_levels={name: ("0", "1") for name in features},
        n_classes=len(cpb_sigma),
    )
    sigma = np.asarray(cpb_sigma, dtype=float)
    return SignificanceProfile(np.stack([sigma, sigma, sigma]), amap)


def make_results(labels, confidences, n_classes=2):
    """Classification results with the given predictions and confidences."""
    return [
        ClassificationResult(label, ClassScores(np.zeros(n_classes), Metric.CPB), 0.0, conf)
        for label, conf in zip(labels, confidences)
    ]


@pytest.fixture
def profile():
    """Three classes; feature c separates them, feature d carries no significance."""
    return make_profile(
        [
            [0.1, 0.3, 0.0, 0.0],
            [0.4, 0.3, 0.0, 0.0],
            [0.7, 0.3, 0.0, 0.0],
        ]
    )


class TestRanks:
    """Test flip and feature ranks."""

    def test_flip_rank(self, profile):
        """Test the mean absolute difference over class pairs."""
        assert flip_rank(profile, Metric.CPB, 0) == pytest.approx(0.4)
        assert flip_rank(profile, Metric.CPB, 1) == 0.0
        assert flip_ranks(profile, Metric.CPR).tolist() == pytest.approx([0.4, 0.0, 0.0, 0.0])

    def test_flip_rank_matches_loop(self):
        """Test flip ranks against an explicit loop over class pairs on random profiles."""
        rng = np.random.default_rng(3)
        for _ in range(1000):
            n_classes = int(rng.integers(2, 8))
            sigma = rng.exponential(1.0, (n_classes, 4)) * rng.choice([1e-6, 1.0, 1e6])
            profile = make_profile(sigma)
            flip = int(rng.integers(0, 4))

            total, pairs = 0.0, 0
            for i in range(n_classes):
                for j in range(i + 1, n_classes):
                    total += abs(sigma[i, flip] - sigma[j, flip])
                    pairs += 1

            assert flip_rank(profile, Metric.CPB, flip) == pytest.approx(
                total / pairs, rel=1e-12, abs=0.0
            )

    def test_feature_rank(self, profile):
        """Test averaging over the flips of a feature."""
        assert feature_rank(profile, Metric.CPB, "c") == pytest.approx(0.2)
        assert feature_rank(profile, Metric.CPB, "d") == 0.0

    def test_rank_report_order(self, profile):
        """Test descending average rank."""
        report = rank_report(profile, Metric.CPR, top_k=None, class_names=("lo", "mid", "hi"))

        assert report.feature_names == ["c", "d"]
        assert report.class_names == ("lo", "mid", "hi")
        assert report.features[0].avg_rank == pytest.approx(0.2)
        assert [r.flip for r in report.features[0].flips] == ["c_0", "c_1"]

    def test_ties_ordered_by_name(self):
        """Test that equal ranks fall back to the feature name."""
        sigma = [[0.1, 0.2, 0.1, 0.2], [0.3, 0.2, 0.3, 0.2]]
        report = rank_report(make_profile(sigma, ("b", "a")), Metric.CPB, top_k=None)

        assert report.feature_names == ["a", "b"]

    def test_normalized_significance(self, profile):
        """Test that normalized values sum to 1 per feature and class, or are all 0."""
        report = rank_report(profile, Metric.CPB, top_k=None)
        c, d = report.features

        assert c.flips[0].normalized[0] == pytest.approx(0.25)
        assert c.flips[1].normalized[0] == pytest.approx(0.75)
        for k in range(3):
            assert sum(r.normalized[k] for r in c.flips) == pytest.approx(1.0)
            assert sum(r.normalized[k] for r in d.flips) == 0.0

    def test_top_k(self, profile):
        """Test limiting the report size."""
        assert rank_report(profile, Metric.CPB, top_k=1).feature_names == ["c"]
        assert rank_report(profile, Metric.CPB, top_k=0).features == ()

        with pytest.raises(ConfigError, match="top_k=3"):
            rank_report(profile, Metric.CPB, top_k=3)

        with pytest.raises(ConfigError, match="Unknown flip index"):
            flip_rank(profile, Metric.CPB, 9)

    def test_rank_frame(self, profile):
        """Test the long table of a report."""
        frame = rank_report(profile, Metric.CPB, top_k=1).to_frame()

        assert list(frame.columns) == [
            "feature",
            "flip",
            "class",
            "sigma",
            "normalized_sigma",
            "flip_rank",
            "avg_rank",
        ]
        assert len(frame) == 2 * 3


class TestConfidenceAnalysis:
    """Test relating confidence to balanced accuracy."""

    @pytest.fixture
    def report(self):
        """Four samples over three confidence bins."""
        results = make_results([0, 1, 1, 1], [5.0, 15.0, 15.0, 95.0])
        return confidence_analysis(
            results, [0, 1, 0, 1], config=ConfidenceConfig(coverage_levels=(90, 50))
        )

    def test_bins(self, report):
        """Test population and per-bin balanced accuracy."""
        assert report.n_bins == 10
        assert report.bin_edges.tolist() == [float(v) for v in range(0, 101, 10)]
        assert report.population.tolist() == [1, 2, 0, 0, 0, 0, 0, 0, 0, 1]
        assert report.balanced_accuracy[0] == 1.0
        assert report.balanced_accuracy[1] == 0.5
        assert math.isnan(report.balanced_accuracy[2])
        assert report.balanced_accuracy[9] == 1.0

    def test_cumulative_series(self, report):
        """Test pooled and bin-mean cumulative values."""
        assert report.cum_weighted_ba[1] == pytest.approx(0.75)
        assert report.cum_bin_mean_ba[1] == pytest.approx(2 / 3)
        assert report.cum_population_fraction[1] == pytest.approx(0.75)
        assert report.cum_population_fraction[-1] == pytest.approx(1.0)
        assert report.cum_weighted_ba[-1] == pytest.approx(report.cohort_ba)
        assert report.cohort_ba == pytest.approx(0.75)

    def test_absent_classes_noted(self, report):
        """Test notes for bins that miss a class."""
        assert len(report.notes) == 2
        assert report.notes[0].startswith("bin [0, 10)")

    def test_coverage_thresholds(self, report):
        """Test the smallest confidence covering at most p% of samples."""
        high90, high50 = report.coverage

        assert high90.threshold == 15.0
        assert high90.achieved_fraction == 0.75
        assert high90.balanced_accuracy == pytest.approx(0.5)
        assert high50.threshold == 95.0
        assert high50.achieved_fraction == 0.25
        assert high50.balanced_accuracy == 1.0

    def test_low_side_coverage(self):
        """Test thresholds counted from the least confident samples."""
        results = make_results([0, 1, 1, 1], [5.0, 15.0, 15.0, 95.0])
        config = ConfidenceConfig(coverage_levels=(50,), coverage_side="low")
        (low50,) = confidence_analysis(results, [0, 1, 0, 1], config=config).coverage

        assert low50.threshold == 5.0
        assert low50.achieved_fraction == 0.25

    def test_full_confidence_lands_in_last_bin(self):
        """Test that confidence 100 belongs to the last bin and covers everything."""
        results = make_results([0, 1, 0], [100.0, 100.0, 100.0])
        report = confidence_analysis(results, [0, 1, 1])

        assert report.population[-1] == 3
        assert all(c.threshold == 100.0 for c in report.coverage)
        assert all(c.achieved_fraction == 1.0 for c in report.coverage)

    def test_chance_line(self):
        """Test the 1/K reference for five classes."""
        results = make_results([0, 1, 2, 3, 4], [10.0, 20.0, 30.0, 40.0, 50.0], n_classes=5)
        report = confidence_analysis(results, [0, 1, 2, 3, 4])

        assert report.chance_line == pytest.approx(0.2)
        assert report.cohort_ba == 1.0

    def test_analysis_validation(self):
        """Test configuration and input validation."""
        with pytest.raises(ConfigError, match="non-empty cohort"):
            confidence_analysis([], [])

        with pytest.raises(ConfigError, match="2 results but 1 labels"):
            confidence_analysis(make_results([0, 1], [1.0, 2.0]), [0])

        with pytest.raises(ConfigError, match="bin_width"):
            ConfidenceConfig(bin_width=0)

        with pytest.raises(ConfigError, match="coverage levels"):
            ConfidenceConfig(coverage_levels=(0,))

        with pytest.raises(ConfigError, match="coverage_side"):
            ConfidenceConfig(coverage_side="middle")


class TestMetricSelection:
    """Test choosing the most reliable metric."""

    def test_highest_coverage_accuracy_wins(self):
        """Test selecting by mean coverage balanced accuracy."""
        confidences = [10.0, 40.0, 70.0, 95.0]
        good = confidence_analysis(make_results([0, 1, 0, 1], confidences), [0, 1, 0, 1])
        poor = confidence_analysis(make_results([1, 0, 0, 1], confidences), [0, 1, 0, 1])

        assert select_metric_by_coverage({Metric.CPB: poor, Metric.CPR: good}) is Metric.CPR

    def test_ties_keep_canonical_order(self):
        """Test that equal reports select the first metric."""
        report = confidence_analysis(make_results([0, 1], [10.0, 90.0]), [0, 1])

        assert select_metric_by_coverage({Metric.CPR: report, Metric.CDG: report}) is Metric.CDG

        with pytest.raises(ConfigError, match="No confidence reports"):
            select_metric_by_coverage({})


def svg_ids(path):
    """Element ids of an SVG file."""
    root = ET.parse(path).getroot()
    return {el.get("id") for el in root.iter() if el.get("id")}


class TestEmitReports:
    """Test writing report files."""

    @pytest.fixture
    def reports(self, small_model, small_data):
        """Rank and confidence reports for CPB and CPR."""
        metrics = [Metric.CPB, Metric.CPR]
        ranks = [small_model.rank_report(m, top_k=3) for m in metrics]
        confidence = {m: small_model.confidence_report(small_data, m) for m in metrics}
        return ranks, confidence

    def test_files_per_metric(self, reports, tmp_path):
        """Test that every artifact is written."""
        written = emit_reports(*reports, tmp_path)

        assert sorted(p.name for p in written) == sorted(
            f"{stem}_{m}.{ext}"
            for m in ("CPB", "CPR")
            for stem, ext in (
                ("ranks", "json"),
                ("ranks", "csv"),
                ("ranks", "svg"),
                ("confidence", "csv"),
                ("confidence", "svg"),
            )
        )
        document = json.loads((tmp_path / "ranks_CPR.json").read_text(encoding="utf-8"))
        assert document["metric"] == "CPR"
        assert len(document["features"]) == 3

    def test_confidence_csv_layout(self, reports, tmp_path):
        """Test the bin table, blank line and coverage table."""
        emit_reports(*reports, tmp_path)
        blocks = (tmp_path / "confidence_CPB.csv").read_text(encoding="utf-8").split("\n\n")

        assert blocks[0].startswith("bin_lo,bin_hi,population,balanced_accuracy")
        assert blocks[1].startswith("coverage,threshold,achieved_fraction,balanced_accuracy")
        assert len(blocks[0].splitlines()) == 1 + 10
        assert len(blocks[1].strip().splitlines()) == 1 + 5

    def test_svg_series_ids(self, reports, tmp_path):
        """Test that plotted series can be found by id."""
        ranks, confidence = reports
        emit_reports(ranks, confidence, tmp_path)

        ids = svg_ids(tmp_path / "confidence_CPR.svg")
        assert {
            "histogram-ba",
            "cumulative-ba",
            "chance-line",
            "histogram-population",
            "cumulative-population",
            "coverage-90",
            "coverage-50",
        } <= ids
        rank_ids = svg_ids(tmp_path / "ranks_CPR.svg")
        assert {f"feature-{name}" for name in ranks[1].feature_names} <= rank_ids

    def test_reports_are_reproducible(self, reports, tmp_path):
        """Test byte-identical output for identical inputs."""
        emit_reports(*reports, tmp_path / "first")
        emit_reports(*reports, tmp_path / "second")

        for name in ("ranks_CPB.svg", "confidence_CPB.svg", "ranks_CPB.csv", "confidence_CPB.csv"):
            assert (tmp_path / "first" / name).read_bytes() == (
                tmp_path / "second" / name
            ).read_bytes()

    def test_empty_rank_report(self, small_model, tmp_path):
        """Test that a report without features still produces every file."""
        written = emit_reports([small_model.rank_report(Metric.CDG, top_k=0)], {}, tmp_path)

        assert [p.name for p in written] == ["ranks_CDG.json", "ranks_CDG.csv", "ranks_CDG.svg"]
        assert json.loads(written[0].read_text(encoding="utf-8"))["features"] == []

"""Tests for flip significance, scoring and confidence."""

import numpy as np
import pytest

from cactus.abstraction import AbstractionMap, Cutoff, abstract
from cactus.classifier import (
    SignificanceProfile,
    classify,
    classify_dataset,
    normalize_confidence,
    raw_confidence,
    score,
    train,
)
from cactus.errors import AbstractionError, ConfigError, ModelFormatError
from cactus.knowledge_graph import CentralityTable, build_class_graphs, compute_centralities
from cactus.models import FeatureKind, Metric

CPB_SIGMA = np.array(
    [
        [0.9, 0.1, 0.5, 0.2],
        [0.2, 0.7, 0.1, 0.6],
        [0.4, 0.7, 0.3, 0.3],
    ]
)


@pytest.fixture
def universe():
    """One continuous and one binary categorical feature: flips x_D, x_U, c_0, c_1."""
    return AbstractionMap.build(
        source_features=["x", "c"],
        kinds={"x": FeatureKind.CONTINUOUS, "c": FeatureKind.CATEGORICAL},
        cutoffs={"x": Cutoff("x", 0.0, 2, 0.8)},
        categorical_levels={"c": ("0", "1")},
        n_classes=3,
    )


@pytest.fixture
def profile(universe):
    """Three-class profile with hand-picked significances."""
    sigma = np.stack([CPB_SIGMA, CPB_SIGMA * 2.0, CPB_SIGMA * 0.5])
    bounds = {Metric.CPB: (0.5, 1.3), Metric.CDG: (1.0, 2.6), Metric.CPR: (0.25, 0.65)}
    return SignificanceProfile(sigma, universe, bounds)


def naive_costs(flips, sigma):
    """Sum significances flip by flip."""
    costs = [0.0] * sigma.shape[0]
    for c in range(sigma.shape[0]):
        for f in flips:
            costs[c] += sigma[c, f]
    return costs


class TestScore:
    """Test additive class costs."""

    def test_costs_match_naive_sum(self, profile):
        """Test scoring against an explicit loop for every metric."""
        for flips in ({0, 2}, {1, 3}, {0}, {3}):
            for metric in Metric:
                costs = score(flips, profile, metric).costs
                assert costs == pytest.approx(naive_costs(flips, profile.for_metric(metric)))

    @pytest.mark.parametrize("target", range(3))
    def test_single_class_flip_raises_one_cost(self, universe, target):
        """Test adding a flip whose significance is zero outside one class."""
        rng = np.random.default_rng(target)
        sigma = rng.uniform(0.0, 1.0, (3, 3, 4))
        sigma[:, :, 3] = 0.0
        sigma[:, target, 3] = rng.uniform(0.1, 1.0, 3)
        profile = SignificanceProfile(sigma, universe)

        for metric in Metric:
            without = score({0}, profile, metric).costs
            with_flip = score({0, 3}, profile, metric).costs

            assert with_flip[target] >= without[target]
            others = [c for c in range(3) if c != target]
            assert np.array_equal(with_flip[others], without[others])

    def test_unknown_flip(self, profile):
        """Test rejecting a flip outside the universe."""
        with pytest.raises(AbstractionError, match="Unknown flip index 7"):
            score({0, 7}, profile, Metric.CPB)


class TestConfidence:
    """Test raw and normalized confidence."""

    def test_raw_confidence(self):
        """Test the mean gap between the winner and every other class."""
        assert raw_confidence([1.4, 0.3, 0.7], 0) == pytest.approx(0.9)
        assert raw_confidence([3.0, 1.0], 0) == 2.0

    def test_raw_confidence_matches_loop(self):
        """Test raw confidence against an explicit loop on random cost vectors."""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n_classes = int(rng.integers(2, 21))
            costs = rng.exponential(1.0, n_classes) * rng.choice([1e-6, 1.0, 1e6])
            label = int(rng.integers(0, n_classes))

            total = 0.0
            for c in range(n_classes):
                if c != label:
                    total += abs(costs[label] - costs[c])
            expected = total / (n_classes - 1)

            assert raw_confidence(costs, label) == pytest.approx(expected, rel=1e-12, abs=0.0)

    def test_two_classes_is_cost_gap(self):
        """Test that with two classes raw confidence is the absolute cost difference."""
        rng = np.random.default_rng(2)
        for costs in rng.uniform(0.0, 5.0, (100, 2)):
            label = int(np.argmax(costs))

            assert raw_confidence(costs, label) == abs(costs[0] - costs[1])

    def test_minmax_normalization(self):
        """Test scaling into [0, 100] with clamping."""
        assert normalize_confidence(0.9, (0.5, 1.3)) == (pytest.approx(50.0), None)
        assert normalize_confidence(2.0, (0.5, 1.3))[0] == 100.0
        assert normalize_confidence(0.1, (0.5, 1.3))[0] == 0.0

    def test_max_normalization(self):
        """Test scaling by the training maximum only."""
        confidence, warning = normalize_confidence(0.65, (0.5, 1.3), "max")

        assert confidence == pytest.approx(50.0)
        assert warning is None

    def test_degenerate_bounds(self):
        """Test that equal bounds give confidence 0 with a warning."""
        confidence, warning = normalize_confidence(0.7, (0.7, 0.7))

        assert confidence == 0.0
        assert "degenerate" in warning

        confidence, warning = normalize_confidence(0.7, None)
        assert confidence == 0.0
        assert warning is not None


class TestClassify:
    """Test class assignment."""

    def test_highest_cost_wins(self, profile):
        """Test label, raw and normalized confidence of one sample."""
        result = classify({0, 2}, profile, Metric.CPB)

        assert result.label == 0
        assert result.scores.costs == pytest.approx([1.4, 0.3, 0.7])
        assert result.raw_confidence == pytest.approx(0.9)
        assert result.confidence == pytest.approx(50.0)
        assert not result.degenerate
        assert result.warnings == ()

    def test_metrics_scale_consistently(self, profile):
        """Test that proportional metrics agree on label and confidence."""
        results = [classify({0, 2}, profile, m) for m in Metric]

        assert {r.label for r in results} == {0}
        assert [r.confidence for r in results] == pytest.approx([50.0, 50.0, 50.0])

    def test_label_survives_shift_and_scale(self, universe):
        """Test that a common cost offset or a rescaled metric keeps every label."""
        rng = np.random.default_rng(11)
        sigma = rng.uniform(0.0, 1.0, (3, 3, 4))
        shifted = sigma.copy()
        # flip 0 is in every sample below, so this adds 5 to all class costs
        shifted[:, :, 0] += 5.0
        scaled = sigma.copy()
        scaled[Metric.CDG.index] *= 3.7
        base, plus, times = (SignificanceProfile(s, universe) for s in (sigma, shifted, scaled))

        for flips in ({0}, {0, 2}, {0, 3}, {0, 1, 2}, {0, 1, 3}):
            for metric in Metric:
                label = classify(flips, base, metric).label
                assert classify(flips, plus, metric).label == label
                assert classify(flips, times, metric).label == label

    def test_tie_goes_to_smallest_index(self, profile):
        """Test tie-breaking with a warning."""
        result = classify({1}, profile, Metric.CPB)

        assert result.label == 1
        assert result.warnings[0].startswith("tie")

    def test_degenerate_sample(self, profile):
        """Test a sample without any flips."""
        result = classify(set(), profile, Metric.CPR)

        assert result.degenerate
        assert result.label == 0
        assert result.raw_confidence == 0.0
        assert result.confidence == 0.0

    def test_profile_validation(self, universe):
        """Test rejecting malformed profiles."""
        with pytest.raises(ConfigError, match="normalization"):
            SignificanceProfile(np.zeros((3, 3, 4)), universe, {}, "zscore")

        with pytest.raises(ModelFormatError, match="does not match"):
            SignificanceProfile(np.zeros((3, 3, 5)), universe)


class TestTrain:
    """Test computing the significance tensor from data."""

    @pytest.fixture
    def trained(self, small_data):
        """Flip table, graphs, centralities and trained profile of the small dataset."""
        amap, ft = abstract(small_data)
        graphs = build_class_graphs(ft, small_data.labels, small_data.n_classes)
        table = compute_centralities(graphs)
        return ft, graphs, table, train(ft, small_data.labels, graphs, table)

    def test_sigma_definitions(self, trained):
        """Test that each metric multiplies P(flip | class) by its centrality."""
        ft, graphs, table, profile = trained
        probs = np.vstack([g.flip_class_prob for g in graphs])

        assert profile.for_metric(Metric.CPB) == pytest.approx(probs)
        assert profile.for_metric(Metric.CDG) == pytest.approx(probs * table.degree)
        assert profile.for_metric(Metric.CPR) == pytest.approx(probs * table.pagerank)

    def test_training_confidence_spans_range(self, trained, small_data):
        """Test that min/max bounds map training confidence onto [0, 100]."""
        ft, graphs, table, profile = trained
        for metric in Metric:
            confidences = [r.confidence for r in classify_dataset(ft, profile, metric)]
            assert min(confidences) == pytest.approx(0.0)
            assert max(confidences) == pytest.approx(100.0)

    def test_batch_matches_single(self, trained):
        """Test that classify_dataset equals row-by-row classification."""
        ft, graphs, table, profile = trained
        batch = classify_dataset(ft, profile, Metric.CPR)

        for i in range(0, ft.n_rows, 37):
            single = classify(ft.flips(i), profile, Metric.CPR)
            assert batch[i].label == single.label
            assert batch[i].confidence == single.confidence

    def test_train_validation(self, trained, small_data):
        """Test rejecting misaligned labels and non-finite centralities."""
        ft, graphs, table, profile = trained

        with pytest.raises(ModelFormatError, match="labels for"):
            train(ft, small_data.labels[:-1], graphs, table)

        broken = CentralityTable(pagerank=table.pagerank.copy(), degree=table.degree)
        broken.pagerank[0, 0] = np.nan
        with pytest.raises(ModelFormatError, match="Non-finite PageRank"):
            train(ft, small_data.labels, graphs, broken)

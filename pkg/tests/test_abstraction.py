"""Tests for cut-off search and flip encoding."""

import numpy as np
import pytest

from cactus.abstraction import (
    DOWN,
    UP,
    AbstractionMap,
    abstract,
    best_cutoff,
    build_abstraction,
    encode,
    encode_dataset,
    enumerate_bipartitions,
)
from cactus.errors import AbstractionError, DegenerateFeatureError, SchemaMismatchError
from cactus.models import FeatureKind, Flip


def brute_force_cutoff(values, labels, n_classes):
    """Loop over every (partition, threshold) pair, keeping the first maximum."""
    distinct = sorted(set(values))
    thresholds = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    best = None
    for mask in enumerate_bipartitions(n_classes):
        group = [(mask >> int(k)) & 1 for k in labels]
        n1 = sum(group)
        n0 = len(group) - n1
        if n0 == 0 or n1 == 0:
            continue
        for t in thresholds:
            below0 = sum(1 for v, g in zip(values, group) if g == 0 and v <= t)
            above1 = sum(1 for v, g in zip(values, group) if g == 1 and v > t)
            ba = (below0 / n0 + above1 / n1) / 2.0
            score = max(ba, 1.0 - ba)
            if best is None or score > best[0]:
                best = (score, mask, t)
    return best


@pytest.fixture
def mixed_dataset(make_dataset):
    """Dataset with one usable feature of each kind plus a constant and an empty one."""
    return make_dataset(
        {
            "x": [1.0, 2.0, 3.0, 4.0, None, 5.0],
            "c": ["1", "2", "1", None, "3", "2"],
            "const": [7.0] * 6,
            "empty": [None] * 6,
        },
        [0, 0, 1, 1, 0, 1],
        kinds={"c": FeatureKind.CATEGORICAL},
    )


class TestBipartitions:
    """Test class bipartition enumeration."""

    def test_small_class_counts(self):
        """Test the masks for two and three classes."""
        assert enumerate_bipartitions(2) == [2]
        assert enumerate_bipartitions(3) == [2, 4, 6]

    def test_count_and_class_zero_side(self):
        """Test that every complementary pair appears once with class 0 in group 0."""
        masks = enumerate_bipartitions(5)

        assert len(masks) == 2 ** 4 - 1
        assert len(set(masks)) == len(masks)
        assert all(m & 1 == 0 for m in masks)

    def test_class_count_limits(self):
        """Test rejecting too few or too many classes."""
        with pytest.raises(AbstractionError, match="at least 2 classes"):
            enumerate_bipartitions(1)

        with pytest.raises(AbstractionError, match="bipartition limit"):
            enumerate_bipartitions(21)


class TestBestCutoff:
    """Test the exhaustive cut-off search."""

    def test_perfect_split(self):
        """Test a feature that separates two classes."""
        cutoff = best_cutoff([1.0, 2.0, 3.0, 4.0], [0, 0, 1, 1], [2], feature="x")

        assert cutoff.feature == "x"
        assert cutoff.threshold == 2.5
        assert cutoff.partition == 2
        assert cutoff.achieved_ba == 1.0

    def test_inverted_direction_is_symmetrized(self):
        """Test that a split with class 0 above the threshold still scores 1."""
        cutoff = best_cutoff([1.0, 2.0, 3.0, 4.0], [1, 1, 0, 0], [2])

        assert cutoff.threshold == 2.5
        assert cutoff.achieved_ba == 1.0

    def test_three_class_partition(self):
        """Test finding the grouping that isolates class 0."""
        values = [1.0, 2.0, 5.0, 6.0, 5.5, 6.5]
        labels = [0, 0, 1, 1, 2, 2]
        cutoff = best_cutoff(values, labels, enumerate_bipartitions(3))

        assert cutoff.partition == 6
        assert cutoff.group_one(3) == [1, 2]
        assert cutoff.threshold == 3.5
        assert cutoff.achieved_ba == 1.0

    @pytest.mark.parametrize("seed", range(60))
    def test_matches_brute_force(self, seed):
        """Test the vectorized search against an explicit loop."""
        n_classes = 2 + seed % 4
        rng = np.random.default_rng(seed)
        n_rows = int(rng.integers(10, 120))
        labels = np.concatenate([np.arange(n_classes), rng.integers(0, n_classes, n_rows)])
        values = np.round(rng.normal(labels * 0.7, 1.0), 1)

        cutoff = best_cutoff(values, labels, enumerate_bipartitions(n_classes), n_classes)
        score, mask, threshold = brute_force_cutoff(values.tolist(), labels.tolist(), n_classes)

        assert cutoff.achieved_ba == pytest.approx(score)
        assert cutoff.partition == mask
        assert cutoff.threshold == pytest.approx(threshold)

    def test_twenty_classes(self):
        """Test the search at the class limit, where every partition is scored."""
        labels = np.repeat(np.arange(20), 3)
        values = np.where(labels < 10, 0.0, 1.0)

        cutoff = best_cutoff(values, labels, enumerate_bipartitions(20), 20)

        assert cutoff.partition == sum(1 << k for k in range(10, 20))
        assert cutoff.threshold == 0.5
        assert cutoff.achieved_ba == 1.0

    @pytest.mark.slow
    def test_twenty_classes_many_values(self):
        """Test the class limit with hundreds of candidate thresholds."""
        rng = np.random.default_rng(20)
        labels = np.concatenate([np.arange(20), rng.integers(0, 20, 380)])
        values = rng.normal(labels * 0.1, 1.0)

        cutoff = best_cutoff(values, labels, enumerate_bipartitions(20), 20)

        assert 0.5 <= cutoff.achieved_ba <= 1.0
        assert cutoff.partition & 1 == 0

    @pytest.mark.parametrize("seed", range(10))
    def test_small_blocks_keep_tie_order(self, seed, monkeypatch):
        """Test that scoring one partition per block picks the same winner."""
        monkeypatch.setattr("cactus.abstraction.SEARCH_CHUNK_CELLS", 7)
        n_classes = 3 + seed % 3
        rng = np.random.default_rng(100 + seed)
        labels = np.concatenate([np.arange(n_classes), rng.integers(0, n_classes, 40)])
        # coarse values produce many tied scores
        values = rng.integers(0, 4, labels.size).astype(float)

        cutoff = best_cutoff(values, labels, enumerate_bipartitions(n_classes), n_classes)
        score, mask, threshold = brute_force_cutoff(values.tolist(), labels.tolist(), n_classes)

        assert cutoff.achieved_ba == pytest.approx(score)
        assert cutoff.partition == mask
        assert cutoff.threshold == threshold

    @pytest.mark.parametrize("seed", range(5))
    def test_row_order_does_not_matter(self, seed):
        """Test that shuffling rows leaves the cut-off unchanged."""
        rng = np.random.default_rng(seed)
        labels = np.concatenate([np.arange(4), rng.integers(0, 4, 80)])
        values = np.round(rng.normal(labels * 0.5, 1.0), 1)
        order = rng.permutation(labels.size)
        partitions = enumerate_bipartitions(4)

        assert best_cutoff(values, labels, partitions, 4) == best_cutoff(
            values[order], labels[order], partitions, 4
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_increasing_transform_moves_threshold(self, seed):
        """Test that a strictly increasing map of the values keeps the split."""
        rng = np.random.default_rng(seed)
        labels = np.concatenate([np.arange(3), rng.integers(0, 3, 60)])
        values = np.round(rng.normal(labels * 0.8, 1.0), 1)
        transformed = np.exp(values / 2.0) + values ** 3
        partitions = enumerate_bipartitions(3)

        before = best_cutoff(values, labels, partitions, 3)
        after = best_cutoff(transformed, labels, partitions, 3)

        lo = values[values <= before.threshold].max()
        hi = values[values > before.threshold].min()
        assert after.achieved_ba == before.achieved_ba
        assert after.partition == before.partition
        assert after.threshold == pytest.approx(
            (np.exp(lo / 2.0) + lo ** 3 + np.exp(hi / 2.0) + hi ** 3) / 2.0
        )

    def test_cutoff_validation(self):
        """Test degenerate inputs to the search."""
        with pytest.raises(DegenerateFeatureError, match="constant"):
            best_cutoff([3.0, 3.0, 3.0], [0, 1, 0], [2])

        with pytest.raises(AbstractionError, match="single class"):
            best_cutoff([1.0, 2.0], [0, 0], [2], n_classes=2)

        with pytest.raises(AbstractionError, match="values but"):
            best_cutoff([1.0, 2.0], [0], [2])


class TestAbstraction:
    """Test learning and applying an abstraction."""

    def test_flip_universe(self, mixed_dataset):
        """Test the deterministic flip order and dropped features."""
        amap = build_abstraction(mixed_dataset)

        assert amap.features == ["x", "c"]
        assert [f.name for f in amap.flips] == ["x_D", "x_U", "c_1", "c_2", "c_3"]
        assert amap.source_features == ("x", "c", "const", "empty")
        assert len(amap.warnings) == 2
        assert amap.cutoffs["x"].threshold == 2.5

    def test_encode_dataset(self, mixed_dataset):
        """Test that missing cells carry no flip."""
        amap, ft = abstract(mixed_dataset)

        assert ft.flips(0) == frozenset({0, 2})
        assert ft.flips(3) == frozenset({1})
        assert ft.flips(4) == frozenset({4})
        assert ft.matrix.sum(axis=1).tolist() == [2, 2, 2, 1, 1, 2]

    def test_at_most_one_flip_per_feature(self, small_data):
        """Test that each observed feature sets exactly one of its flips."""
        amap, ft = abstract(small_data)

        for name in amap.features:
            counts = ft.matrix[:, amap.feature_flips(name)].sum(axis=1)
            observed = small_data.missing_mask()[:, small_data.feature_index(name)] == 0
            assert np.array_equal(counts, observed.astype(int))

    def test_encode_single_sample(self, mixed_dataset):
        """Test encoding one raw row."""
        amap = build_abstraction(mixed_dataset)

        assert encode([3.0, "2", 7.0, None], amap) == frozenset(
            {amap.index_of(Flip("x", UP)), amap.index_of(Flip("c", "2"))}
        )
        assert encode([2.5, None, None, None], amap) == frozenset(
            {amap.index_of(Flip("x", DOWN))}
        )

    def test_continuous_flip_is_monotone(self, mixed_dataset):
        """Test that larger values never map back to the Down flip."""
        amap = build_abstraction(mixed_dataset)
        up = amap.index_of(Flip("x", UP))
        threshold = amap.cutoffs["x"].threshold
        grid = sorted(np.linspace(-10.0, 10.0, 201).tolist() + [threshold])

        is_up = [up in encode([v, None, None, None], amap) for v in grid]

        assert is_up == sorted(is_up)
        assert is_up[grid.index(threshold)] is False

    def test_unseen_level_skipped(self, mixed_dataset):
        """Test that an unseen categorical level is ignored with a warning."""
        amap = build_abstraction(mixed_dataset)
        warnings = []

        assert encode([1.0, "9", None, None], amap, warnings) == frozenset({0})
        assert len(warnings) == 1
        assert "unseen level '9'" in warnings[0]

    def test_encode_validation(self, mixed_dataset):
        """Test encoding against a different schema."""
        amap = build_abstraction(mixed_dataset)

        with pytest.raises(SchemaMismatchError, match="expected 4"):
            encode([1.0, "1"], amap)

        with pytest.raises(SchemaMismatchError, match="lacks features"):
            encode_dataset(mixed_dataset.select_features(["c"]), amap)

    def test_unlabelled_dataset_rejected(self, make_dataset):
        """Test that abstraction needs labels."""
        d = make_dataset({"x": [1.0, 2.0]}, None)

        with pytest.raises(AbstractionError, match="labelled"):
            build_abstraction(d)

    def test_map_document(self, mixed_dataset):
        """Test rebuilding a map from its JSON description."""
        amap = build_abstraction(mixed_dataset)
        rebuilt = AbstractionMap.from_dict(amap.to_dict())

        assert rebuilt.flips == amap.flips
        assert rebuilt.cutoffs == amap.cutoffs
        assert rebuilt.categorical_levels == amap.categorical_levels

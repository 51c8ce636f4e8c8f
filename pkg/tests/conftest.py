"""Shared fixtures for the CACTUS test suite."""

from pathlib import Path

import numpy as np
import pytest

from cactus import Cactus
from cactus.harness import SyntheticSpec, synthesize
from cactus.models import FeatureKind, FeatureSchema
from cactus.tabular import Dataset


@pytest.fixture
def write_text(tmp_path):
    """Write a text file under the test's temporary directory."""

    def _write(name: str, content: str) -> Path:
        path = tmp_path / name
        path.write_text(content, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def make_dataset():
    """Build a Dataset from plain Python columns.

    Continuous columns use None for missing cells; they are converted to NaN.
    """

    def _make(columns, labels, class_names=("a", "b"), kinds=None):
        kinds = kinds or {}
        schema = []
        arrays = []
        for name, values in columns.items():
            kind = kinds.get(name, FeatureKind.CONTINUOUS)
            schema.append(FeatureSchema(name, kind))
            if kind is FeatureKind.CONTINUOUS:
                arrays.append(np.array([np.nan if v is None else v for v in values], dtype=float))
            else:
                arrays.append(np.array(values, dtype=object))
        return Dataset(
            schema=tuple(schema),
            columns=tuple(arrays),
            labels=None if labels is None else np.asarray(labels, dtype=np.int64),
            class_names=tuple(class_names),
        )

    return _make


@pytest.fixture(scope="module")
def small_spec():
    """Three-class mixed dataset spec, small enough for fast training."""
    return SyntheticSpec(
        n_rows=240,
        class_proportions=(0.5, 0.3, 0.2),
        n_continuous=4,
        n_categorical=2,
        n_informative=4,
        seed=7,
    )


@pytest.fixture(scope="module")
def small_data(small_spec):
    """Generated dataset for ``small_spec``."""
    return synthesize(small_spec)


@pytest.fixture(scope="module")
def small_model(small_data):
    """Model trained on ``small_data``."""
    return Cactus.fit(small_data)

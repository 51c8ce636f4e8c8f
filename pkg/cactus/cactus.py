"""CACTUS model: fit, classify, explain and persist."""

import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from cactus.abstraction import AbstractionMap, FlipTable, abstract, encode, encode_dataset
from cactus.classifier import (
    ClassificationResult,
    SignificanceProfile,
    classify,
    classify_dataset,
    train,
)
from cactus.errors import AbstractionError, ModelFormatError, SchemaMismatchError
from cactus.explain import (
    ConfidenceConfig,
    ConfidenceReport,
    RankReport,
    confidence_analysis,
    rank_report,
)
from cactus.knowledge_graph import (
    CentralityTable,
    ClassGraph,
    PageRankConfig,
    build_class_graphs,
    compute_centralities,
)
from cactus.models import FeatureKind, FeatureSchema, Metric
from cactus.tabular import Dataset
from cactus.utils import read_json, write_json

logger = logging.getLogger(__name__)

MODEL_FORMAT = "cactus-model"
MODEL_VERSION = 1


class Cactus:
    """Trained classifier: flip abstraction, significance profile and provenance."""

    def __init__(
        self,
        profile: SignificanceProfile,
        class_names: Sequence[str],
        schema: Sequence[FeatureSchema],
        pagerank: PageRankConfig = PageRankConfig(),
        graphs: Optional[Sequence[ClassGraph]] = None,
        centralities: Optional[CentralityTable] = None,
    ):
        """Wrap a trained profile.

        Args:
            profile: Significance profile (carries the abstraction)
            class_names: Class label per index
            schema: Training schema, every loaded feature included
            pagerank: PageRank parameters the profile was trained with
            graphs: Optional per-class knowledge graphs
            centralities: Optional centralities of the graphs
        """
        if len(class_names) != profile.n_classes:
            raise ModelFormatError(
                f"{len(class_names)} class names for a profile of {profile.n_classes} classes"
            )
        self.profile = profile
        self.class_names = tuple(class_names)
        self.schema = tuple(schema)
        self.pagerank = pagerank
        self.graphs = tuple(graphs) if graphs is not None else None
        self.centralities = centralities

    @classmethod
    def fit(
        cls,
        dataset: Dataset,
        pagerank: PageRankConfig = PageRankConfig(),
        normalization: str = "minmax",
        n_jobs: Optional[int] = None,
    ) -> "Cactus":
        """Run abstraction, graph construction, centralities and training.

        Args:
            dataset: Labelled dataset covering every class
            pagerank: PageRank parameters
            normalization: Confidence scaling, "minmax" or "max"
            n_jobs: Worker count (capped by CACTUS_THREADS)

        Returns:
            Trained model

        Raises:
            AbstractionError: If the dataset is unlabelled
            ValueError: If a class has no rows
        """
        if dataset.labels is None:
            raise AbstractionError("Training needs a labelled dataset")
        dataset.check_class_coverage()
        amap, ft = abstract(dataset, n_jobs=n_jobs)
        graphs = build_class_graphs(ft, dataset.labels, dataset.n_classes, n_jobs=n_jobs)
        centralities = compute_centralities(graphs, pagerank, n_jobs=n_jobs)
        profile = train(ft, dataset.labels, graphs, centralities, normalization)
        logger.info(
            "Trained on %d rows: %d of %d features abstracted into %d flips",
            dataset.n_rows,
            len(amap.features),
            dataset.n_features,
            amap.n_flips,
        )
        return cls(profile, dataset.class_names, dataset.schema, pagerank, graphs, centralities)

    @property
    def abstraction(self) -> AbstractionMap:
        """Flip universe of the trained profile."""
        return self.profile.abstraction

    @property
    def n_classes(self) -> int:
        """Number of classes the model was trained on."""
        return self.profile.n_classes

    @property
    def kinds(self) -> Dict[str, FeatureKind]:
        """Kind per training feature, for reloading data consistently."""
        return {f.name: f.kind for f in self.schema}

    # Encoding
    def check_compatible(self, dataset: Dataset) -> None:
        """Raise SchemaMismatchError unless `dataset` can be encoded by this model."""
        kinds = {f.name: f.kind for f in dataset.schema}
        for name, kind in self.abstraction.kinds.items():
            if name not in kinds:
                raise SchemaMismatchError(f"Input lacks feature '{name}' used by the model")
            if kinds[name] is not kind:
                raise SchemaMismatchError(
                    f"Feature '{name}' is {kinds[name].value} in the input "
                    f"but {kind.value} in the model"
                )
        if dataset.labels is not None and dataset.class_names != self.class_names:
            raise SchemaMismatchError(
                f"Input classes {list(dataset.class_names)} differ from the model's "
                f"{list(self.class_names)}"
            )

    def encode(self, dataset: Dataset) -> FlipTable:
        """Flip table of a dataset under the model's abstraction."""
        self.check_compatible(dataset)
        return encode_dataset(dataset, self.abstraction)

    # Classification
    def classify(self, dataset: Dataset, metric: Union[str, Metric]) -> List[ClassificationResult]:
        """Classify every row of a dataset under one metric."""
        return classify_dataset(self.encode(dataset), self.profile, Metric.parse(metric))

    def classify_sample(
        self, sample: Sequence[Any], metric: Union[str, Metric]
    ) -> ClassificationResult:
        """Classify one raw row given in training-schema order."""
        warnings: List[str] = []
        result = classify(encode(sample, self.abstraction, warnings), self.profile, metric)
        if warnings:
            return ClassificationResult(
                result.label,
                result.scores,
                result.raw_confidence,
                result.confidence,
                result.degenerate,
                tuple(warnings) + result.warnings,
            )
        return result

    def predict(self, dataset: Dataset, metric: Union[str, Metric]) -> np.ndarray:
        """Predicted class index per row."""
        return np.array([r.label for r in self.classify(dataset, metric)], dtype=np.int64)

    # Explanation
    def rank_report(self, metric: Union[str, Metric], top_k: Optional[int] = 9) -> RankReport:
        """Top features by average rank, capped at the number of features."""
        if top_k is not None:
            top_k = min(top_k, len(self.abstraction.features))
        return rank_report(self.profile, Metric.parse(metric), top_k, self.class_names)

    def confidence_report(
        self,
        dataset: Dataset,
        metric: Union[str, Metric],
        config: ConfidenceConfig = ConfidenceConfig(),
    ) -> ConfidenceReport:
        """Confidence analysis of a labelled dataset."""
        if dataset.labels is None:
            raise AbstractionError("Confidence analysis needs a labelled dataset")
        metric = Metric.parse(metric)
        return confidence_analysis(
            self.classify(dataset, metric), dataset.labels, self.n_classes, config, metric
        )

    # Persistence
    def to_dict(self, include_graphs: bool = False) -> Dict[str, Any]:
        """JSON-ready model document, optionally with the class graphs."""
        data: Dict[str, Any] = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "class_names": list(self.class_names),
            "schema": [{"name": f.name, "kind": f.kind.value} for f in self.schema],
            "pagerank": {
                "damping": self.pagerank.damping,
                "tol": self.pagerank.tol,
                "max_iter": self.pagerank.max_iter,
            },
            "abstraction": self.abstraction.to_dict(),
            "profile": self.profile.to_dict(),
        }
        if include_graphs and self.graphs is not None:
            data["graphs"] = [
                {
                    "class_id": g.class_id,
                    "flip_class_prob": g.flip_class_prob,
                    "edges": [list(e) for e in g.edges()],
                }
                for g in self.graphs
            ]
        if include_graphs and self.centralities is not None:
            data["centralities"] = {
                "pagerank": self.centralities.pagerank,
                "degree": self.centralities.degree,
            }
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Cactus":
        """Rebuild a model from its JSON document.

        Raises:
            ModelFormatError: If the document is not a supported CACTUS model
        """
        if data.get("format") != MODEL_FORMAT:
            raise ModelFormatError("Not a CACTUS model document")
        if data.get("version") != MODEL_VERSION:
            raise ModelFormatError(f"Unsupported model version {data.get('version')}")
        try:
            amap = AbstractionMap.from_dict(data["abstraction"])
            profile = SignificanceProfile.from_dict(data["profile"], amap)
            schema = [FeatureSchema(s["name"], FeatureKind(s["kind"]), True) for s in data["schema"]]
            pagerank = PageRankConfig(**data["pagerank"])
            graphs: Optional[List[ClassGraph]] = None
            if "graphs" in data:
                graphs = [
                    ClassGraph.from_edges(
                        int(g["class_id"]),
                        amap.n_flips,
                        [(int(u), int(v), float(w)) for u, v, w in g["edges"]],
                        g["flip_class_prob"],
                    )
                    for g in data["graphs"]
                ]
            centralities: Optional[CentralityTable] = None
            if "centralities" in data:
                centralities = CentralityTable(
                    pagerank=np.asarray(data["centralities"]["pagerank"], dtype=np.float64),
                    degree=np.asarray(data["centralities"]["degree"], dtype=np.float64),
                )
            class_names: Tuple[str, ...] = tuple(str(c) for c in data["class_names"])
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed model document: {e}") from e
        return cls(profile, class_names, schema, pagerank, graphs, centralities)

    def save(self, path: Union[str, Path], include_graphs: bool = False) -> Path:
        """Write the model document to `path`."""
        path = write_json(path, self.to_dict(include_graphs=include_graphs))
        logger.info("Saved model to %s", path)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Cactus":
        """Load a model saved with :meth:`save`.

        Raises:
            FileNotFoundError: If the file does not exist
            ModelFormatError: If the content is not a CACTUS model
        """
        data = read_json(path)
        if not isinstance(data, dict):
            raise ModelFormatError(f"Model file {path} must hold a JSON object")
        return cls.from_dict(data)

"""Command-line front end: train, classify, explain, refine, study, synthesize."""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from cactus.cactus import Cactus
from cactus.errors import CactusError, ConfigError
from cactus.explain import ConfidenceConfig, emit_reports, select_metric_by_coverage
from cactus.harness import (
    CV_MODES,
    DEFAULT_LEVELS,
    SyntheticSpec,
    balanced_accuracy,
    cross_validate,
    observed_balanced_accuracy,
    run_fragmentation_study,
    synthesize,
)
from cactus.knowledge_graph import PageRankConfig, export_graphs
from cactus.models import FeatureKind, Metric
from cactus.tabular import Dataset, FilterSpec, SchemaConfig, apply_filter, load_csv, write_csv
from cactus.utils import to_jsonable, write_json

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "CACTUS_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
COMMANDS = ("train", "classify", "explain", "refine", "study", "synthesize")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one CLI invocation."""

    command: str
    out: Path
    input: Optional[Path] = None
    schema: Optional[Path] = None
    model: Optional[Path] = None
    label_column: Optional[str] = None
    metrics: Tuple[Metric, ...] = tuple(Metric)
    seed: int = 0
    pagerank: PageRankConfig = PageRankConfig()
    confidence: ConfidenceConfig = ConfidenceConfig()
    filter: FilterSpec = FilterSpec()
    top_k: int = 9
    rank_metric: Metric = Metric.CPR
    levels: Tuple[float, ...] = DEFAULT_LEVELS
    folds: Optional[int] = None
    holdout: float = 0.2
    cv_mode: str = "holdout"
    feature_baseline: bool = False
    export_graphs: bool = False
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}'")
        out = self.out.resolve()
        for path in (self.input, self.schema, self.model):
            if path is not None and path.resolve() == out:
                raise ConfigError(f"Output directory {self.out} collides with input {path}")
        if self.top_k < 0:
            raise ConfigError(f"--top-k must be >= 0, got {self.top_k}")
        if self.cv_mode not in CV_MODES:
            raise ConfigError(f"--cv-mode must be one of {CV_MODES}")

    @property
    def n_folds(self) -> int:
        """Cross-validation folds, 10 unless given."""
        return self.folds if self.folds is not None else 10

    def schema_config(self) -> SchemaConfig:
        """Schema from the JSON file, with command-line overrides applied."""
        config = SchemaConfig.from_json(self.schema) if self.schema else SchemaConfig()
        if self.label_column:
            config = replace(config, label_column=self.label_column)
        return config

    def to_dict(self) -> Dict[str, Any]:
        """Effective run configuration, as recorded next to the outputs."""
        return {
            "command": self.command,
            "out": self.out,
            "input": self.input,
            "schema": self.schema,
            "model": self.model,
            "label_column": self.label_column,
            "metrics": list(self.metrics),
            "seed": self.seed,
            "pagerank": vars(self.pagerank),
            "confidence": vars(self.confidence),
            "filter": {
                "excluded": sorted(self.filter.excluded),
                "max_missing_fraction": self.filter.max_missing_fraction,
                "keep_top_k_by_rank": self.filter.keep_top_k_by_rank,
            },
            "top_k": self.top_k,
            "rank_metric": self.rank_metric,
            "levels": list(self.levels),
            "folds": self.n_folds,
            "holdout": self.holdout,
            "cv_mode": self.cv_mode,
            "feature_baseline": self.feature_baseline,
            "export_graphs": self.export_graphs,
            "synthetic": vars(self.synthetic),
            "threads": os.environ.get("CACTUS_THREADS", "1"),
        }


def _split_list(value: Optional[str]) -> List[str]:
    if not value:
        return []
    return [v.strip() for v in value.split(",") if v.strip()]


def _parse_levels(value: Optional[str]) -> Tuple[float, ...]:
    if not value:
        return DEFAULT_LEVELS
    try:
        return tuple(float(v) for v in _split_list(value))
    except ValueError:
        raise ConfigError(f"--levels must be comma-separated ratios, got '{value}'") from None


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Resolve parsed arguments into a RunConfig, expanding every default."""
    synthetic = SyntheticSpec()
    if getattr(args, "synthetic_spec", None):
        synthetic = SyntheticSpec.from_json(args.synthetic_spec)
    if getattr(args, "rows", None) is not None:
        synthetic = replace(synthetic, n_rows=args.rows)
    seed = args.seed if args.seed is not None else synthetic.seed
    synthetic = replace(synthetic, seed=seed)

    top_k_features = getattr(args, "top_k_features", None)
    return RunConfig(
        command=args.command,
        out=Path(args.out),
        input=Path(args.input) if args.input else None,
        schema=Path(args.schema) if args.schema else None,
        model=Path(args.model) if args.model else None,
        label_column=args.label_column,
        metrics=tuple(Metric.parse_list(args.metrics)),
        seed=seed,
        pagerank=PageRankConfig(damping=args.damping, tol=args.tol),
        confidence=ConfidenceConfig(normalization=args.normalization),
        filter=FilterSpec(
            excluded=frozenset(_split_list(args.exclude)),
            max_missing_fraction=args.max_missing,
            keep_top_k_by_rank=top_k_features,
        ),
        top_k=args.top_k,
        rank_metric=Metric.parse(args.rank_metric),
        levels=_parse_levels(args.levels),
        folds=args.folds,
        holdout=args.holdout,
        cv_mode=args.cv_mode,
        feature_baseline=args.feature_baseline,
        export_graphs=args.export_graphs,
        synthetic=synthetic,
    )


# Data helpers
def _require(value: Optional[Path], flag: str, command: str) -> Path:
    if value is None:
        raise ConfigError(f"{command} needs {flag}")
    return value


def _load_training_data(config: RunConfig) -> Dataset:
    path = _require(config.input, "--input", config.command)
    return load_csv(path, config.schema_config())


def _load_for_model(config: RunConfig, model: Cactus, require_labels: bool) -> Dataset:
    path = _require(config.input, "--input", config.command)
    return load_csv(
        path,
        config.schema_config(),
        require_labels=require_labels,
        kinds=model.kinds,
        class_names=model.class_names,
    )


def _load_model(config: RunConfig) -> Cactus:
    return Cactus.load(_require(config.model, "--model", config.command))


def _self_balanced_accuracy(model: Cactus, dataset: Dataset) -> Dict[str, float]:
    return {
        m.value: balanced_accuracy(model.predict(dataset, m), dataset.labels, model.n_classes)
        for m in Metric
    }


def abstraction_frame(model: Cactus) -> pd.DataFrame:
    """Per-feature cut-off, partition and achieved BA (levels for categorical features)."""
    amap = model.abstraction
    rows = []
    for name, kind in amap.kinds.items():
        if kind is FeatureKind.CONTINUOUS:
            c = amap.cutoffs[name]
            group = "|".join(model.class_names[k] for k in c.group_one(model.n_classes))
            rows.append((name, kind.value, c.threshold, c.partition, group, c.achieved_ba, ""))
        else:
            levels = "|".join(amap.categorical_levels[name])
            rows.append((name, kind.value, None, None, "", None, levels))
    return pd.DataFrame(
        rows,
        columns=["feature", "kind", "threshold", "partition", "group_one", "achieved_ba", "levels"],
    )


# Commands
def cmd_train(config: RunConfig) -> Dict[str, Any]:
    """Train a model and write model.json, train_report.json and abstraction.csv."""
    if config.filter.keep_top_k_by_rank is not None:
        raise ConfigError("--top-k-features ranks a trained model; use it with refine")
    dataset = apply_filter(_load_training_data(config), config.filter)
    model = Cactus.fit(dataset, config.pagerank, config.confidence.normalization)

    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    model_path = model.save(out / "model.json")
    abstraction_frame(model).to_csv(out / "abstraction.csv", index=False, lineterminator="\n")
    report = {
        "rows": dataset.n_rows,
        "classes": list(model.class_names),
        "features_loaded": dataset.n_features,
        "features_abstracted": len(model.abstraction.features),
        "flips": model.abstraction.n_flips,
        "warnings": list(model.abstraction.warnings),
        "balanced_accuracy": _self_balanced_accuracy(model, dataset),
        "model": model_path.name,
    }
    write_json(out / "train_report.json", report)
    if config.export_graphs:
        export_graphs(
            model.graphs, model.centralities, model.abstraction, model.class_names, out / "graphs"
        )
    for metric, ba in report["balanced_accuracy"].items():
        logger.info("Training balanced accuracy %s: %.4f", metric, ba)
    return report


def cmd_classify(config: RunConfig) -> Dict[str, Any]:
    """Write predictions_<metric>.csv for every selected metric."""
    model = _load_model(config)
    dataset = _load_for_model(config, model, require_labels=False)
    config.out.mkdir(parents=True, exist_ok=True)
    summary: Dict[str, Any] = {"rows": dataset.n_rows, "files": [], "balanced_accuracy": {}}
    for metric in config.metrics:
        results = model.classify(dataset, metric)
        frame = pd.DataFrame(
            {
                "row_id": np.arange(dataset.n_rows),
                "label": [model.class_names[r.label] for r in results],
                "confidence": [r.confidence for r in results],
                "degenerate": [r.degenerate for r in results],
            }
        )
        costs = np.vstack([r.scores.costs for r in results])
        for k, name in enumerate(model.class_names):
            frame[f"cost_{name}"] = costs[:, k]
        path = config.out / f"predictions_{metric.value}.csv"
        frame.to_csv(path, index=False, lineterminator="\n")
        summary["files"].append(path.name)
        if dataset.labels is not None:
            predicted = [r.label for r in results]
            ba = observed_balanced_accuracy(predicted, dataset.labels, model.n_classes)
            summary["balanced_accuracy"][metric.value] = ba
            logger.info("Balanced accuracy %s: %.4f", metric.value, ba)
    return summary


def cmd_explain(config: RunConfig) -> Dict[str, Any]:
    """Emit rank and confidence reports plus metric_selection.json."""
    model = _load_model(config)
    dataset = _load_for_model(config, model, require_labels=True)
    ranks = [model.rank_report(m, config.top_k) for m in config.metrics]
    confidence = {m: model.confidence_report(dataset, m, config.confidence) for m in config.metrics}
    written = emit_reports(ranks, confidence, config.out)

    selected = select_metric_by_coverage(confidence)
    selection = {
        "selected": selected.value,
        "coverage_balanced_accuracy": {
            m.value: {str(c.coverage): c.balanced_accuracy for c in r.coverage}
            for m, r in confidence.items()
        },
        "notes": {m.value: list(r.notes) for m, r in confidence.items()},
    }
    written.append(write_json(config.out / "metric_selection.json", selection))
    logger.info("Most reliable metric by coverage: %s", selected.value)
    return {"files": sorted(p.name for p in written), "selected": selected.value}


def cmd_refine(config: RunConfig) -> Dict[str, Any]:
    """Filter the feature pool, retrain and compare balanced accuracy before/after."""
    model = _load_model(config)
    dataset = _load_for_model(config, model, require_labels=True)
    ranks = model.rank_report(config.rank_metric, top_k=None)
    refined_data = apply_filter(dataset, config.filter, ranks)
    refined = Cactus.fit(refined_data, model.pagerank, model.profile.normalization)

    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    refined.save(out / "model_refined.json")
    write_csv(
        refined_data,
        out / "refined.csv",
        label_column=config.schema_config().label_column,
        schema_path=out / "refined_schema.json",
    )

    rows = []
    for metric in config.metrics:
        row: Dict[str, Any] = {
            "metric": metric.value,
            "features_before": len(model.abstraction.features),
            "features_after": len(refined.abstraction.features),
            "ba_before": observed_balanced_accuracy(
                model.predict(dataset, metric), dataset.labels, model.n_classes
            ),
            "ba_after": observed_balanced_accuracy(
                refined.predict(refined_data, metric), refined_data.labels, refined.n_classes
            ),
        }
        if config.folds is not None:
            for key, data in (("cv_before", dataset), ("cv_after", refined_data)):
                result = cross_validate(
                    data,
                    metric,
                    config.folds,
                    config.holdout,
                    seed=config.seed,
                    mode=config.cv_mode,
                    pagerank=model.pagerank,
                    normalization=model.profile.normalization,
                )
                row[key] = result.formatted
        rows.append(row)
        logger.info(
            "%s: BA %.4f -> %.4f with %d of %d features",
            metric.value,
            row["ba_before"],
            row["ba_after"],
            row["features_after"],
            row["features_before"],
        )
    pd.DataFrame(rows).to_csv(out / "refine_comparison.csv", index=False, lineterminator="\n")
    return {"comparison": rows, "features": refined_data.feature_names}


def cmd_study(config: RunConfig) -> Dict[str, Any]:
    """Run the fragmentation study on --input or on synthetic data."""
    if config.input is not None:
        dataset = _load_training_data(config)
    else:
        dataset = synthesize(config.synthetic)
    study = run_fragmentation_study(
        dataset,
        config.levels,
        config.metrics,
        config.n_folds,
        config.holdout,
        config.seed,
        mode=config.cv_mode,
        pagerank=config.pagerank,
        normalization=config.confidence.normalization,
        feature_baseline=config.feature_baseline,
    )
    written = study.write(config.out)
    return {
        "files": [p.name for p in written],
        "table": study.table().to_dict(orient="records"),
    }


def cmd_synthesize(config: RunConfig) -> Dict[str, Any]:
    """Write synthetic.csv and its matching schema config."""
    dataset = synthesize(config.synthetic)
    config.out.mkdir(parents=True, exist_ok=True)
    label_column = config.label_column or "label"
    path = write_csv(
        dataset,
        config.out / "synthetic.csv",
        label_column=label_column,
        schema_path=config.out / "synthetic_schema.json",
    )
    return {
        "file": path.name,
        "rows": dataset.n_rows,
        "classes": list(dataset.class_names),
        "informative": config.synthetic.informative_names(),
    }


HANDLERS: Dict[str, Callable[[RunConfig], Dict[str, Any]]] = {
    "train": cmd_train,
    "classify": cmd_classify,
    "explain": cmd_explain,
    "refine": cmd_refine,
    "study": cmd_study,
    "synthesize": cmd_synthesize,
}


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per operation."""
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--input", help="Input CSV file")
    shared.add_argument("--schema", help="Schema config JSON")
    shared.add_argument("--model", help="Model JSON file")
    shared.add_argument("--out", default="cactus_out", help="Output directory")
    shared.add_argument("--label-column", help="Label column (overrides the schema config)")
    shared.add_argument("--metrics", help="Comma-separated subset of CPB,CDG,CPR (default all)")
    shared.add_argument("--seed", type=int, default=None, help="Root seed (default 0)")
    shared.add_argument("--damping", type=float, default=0.85, help="PageRank damping factor")
    shared.add_argument("--tol", type=float, default=1e-12, help="PageRank L1 tolerance")
    shared.add_argument(
        "--normalization", choices=["minmax", "max"], default="minmax", help="Confidence scaling"
    )
    shared.add_argument(
        "--max-missing", type=float, default=1.0, help="Drop features missing in more rows than this"
    )
    shared.add_argument("--exclude", help="Comma-separated features to exclude")
    shared.add_argument("--top-k", type=int, default=9, help="Features per rank report")
    shared.add_argument(
        "--top-k-features", type=int, default=None, help="Keep only the k best-ranked features"
    )
    shared.add_argument(
        "--rank-metric", default=Metric.CPR.value, help="Metric whose ranks drive --top-k-features"
    )
    shared.add_argument("--levels", help="Comma-separated removal fractions (default 0,0.2,...,0.8)")
    shared.add_argument("--folds", type=int, default=None, help="Cross-validation folds")
    shared.add_argument("--holdout", type=float, default=0.2, help="Test share per fold")
    shared.add_argument("--cv-mode", choices=list(CV_MODES), default="holdout")
    shared.add_argument("--feature-baseline", action="store_true", help="Add the best-feature baseline")
    shared.add_argument("--export-graphs", action="store_true", help="Write per-class graphs")
    shared.add_argument("--synthetic-spec", help="SyntheticSpec JSON")
    shared.add_argument("--rows", type=int, default=None, help="Synthetic row count")
    shared.add_argument(
        "--log-level",
        default=os.environ.get(LOG_LEVEL_ENV, "INFO"),
        help=f"Log level (default ${LOG_LEVEL_ENV} or INFO)",
    )

    parser = argparse.ArgumentParser(
        prog="cactus", description="Explainable classification of tabular data with missing values"
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("train", parents=[shared], help="Train a model")
    commands.add_parser("classify", parents=[shared], help="Classify samples with a model")
    commands.add_parser("explain", parents=[shared], help="Emit rank and confidence reports")
    commands.add_parser("refine", parents=[shared], help="Filter features and retrain")
    commands.add_parser("study", parents=[shared], help="Run the fragmentation study")
    commands.add_parser("synthesize", parents=[shared], help="Generate a synthetic dataset")
    return parser


def setup_logging(level: str) -> None:
    """Configure stderr logging at the given level."""
    logging.basicConfig(
        level=level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        setup_logging(args.log_level)
    except ValueError:
        parser.error(f"invalid --log-level '{args.log_level}'")
    try:
        config = config_from_args(args)
        logger.info(
            "Resolved config: %s", json.dumps(to_jsonable(config.to_dict()), sort_keys=True)
        )
        HANDLERS[config.command](config)
    except (CactusError, ValueError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Tool handlers for the CACTUS MCP server.

Handlers build a RunConfig from the tool arguments and run the same
command functions as the CLI.
"""

from pathlib import Path
from typing import Any

from mcp.types import TextContent

from cactus.cli import (
    RunConfig,
    cmd_classify,
    cmd_explain,
    cmd_study,
    cmd_synthesize,
    cmd_train,
)
from cactus.harness import DEFAULT_LEVELS, SyntheticSpec
from cactus.knowledge_graph import PageRankConfig
from cactus.models import Metric
from cactus.tabular import FilterSpec
from cactus.utils import dumps_json


def _path(arguments: dict[str, Any], key: str) -> Path | None:
    value = arguments.get(key)
    return Path(value) if value else None


def _text(title: str, payload: dict[str, Any]) -> list[TextContent]:
    return [TextContent(type="text", text=f"{title}\n\n{dumps_json(payload)}")]


class ModelHandlers:
    """Handlers for training and classification tools."""

    async def handle_train_model(self, arguments: dict[str, Any]) -> list[TextContent]:
        """Train a model from a CSV file."""
        config = RunConfig(
            command="train",
            out=Path(arguments["out"]),
            input=_path(arguments, "input"),
            schema=_path(arguments, "schema"),
            pagerank=PageRankConfig(damping=arguments.get("damping", 0.85)),
            filter=FilterSpec(
                excluded=frozenset(arguments.get("exclude", [])),
                max_missing_fraction=arguments.get("max_missing", 1.0),
            ),
        )
        return _text("Model trained:", cmd_train(config))

    async def handle_classify_samples(self, arguments: dict[str, Any]) -> list[TextContent]:
        """Classify a CSV file with a saved model."""
        config = RunConfig(
            command="classify",
            out=Path(arguments["out"]),
            input=_path(arguments, "input"),
            model=_path(arguments, "model"),
            metrics=tuple(Metric.parse_list(arguments.get("metrics"))),
        )
        return _text("Samples classified:", cmd_classify(config))


class ReportHandlers:
    """Handlers for explanation and evaluation tools."""

    async def handle_explain_model(self, arguments: dict[str, Any]) -> list[TextContent]:
        """Write rank and confidence reports for a saved model."""
        config = RunConfig(
            command="explain",
            out=Path(arguments["out"]),
            input=_path(arguments, "input"),
            model=_path(arguments, "model"),
            metrics=tuple(Metric.parse_list(arguments.get("metrics"))),
            top_k=arguments.get("top_k", 9),
        )
        return _text("Reports written:", cmd_explain(config))

    async def handle_synthesize_dataset(self, arguments: dict[str, Any]) -> list[TextContent]:
        """Generate a synthetic dataset and its schema."""
        seed = arguments.get("seed", 0)
        synthetic = SyntheticSpec(n_rows=arguments.get("rows", 1000), seed=seed)
        config = RunConfig(
            command="synthesize", out=Path(arguments["out"]), seed=seed, synthetic=synthetic
        )
        return _text("Dataset generated:", cmd_synthesize(config))

    async def handle_run_study(self, arguments: dict[str, Any]) -> list[TextContent]:
        """Run a fragmentation study on a CSV file."""
        seed = arguments.get("seed", 0)
        config = RunConfig(
            command="study",
            out=Path(arguments["out"]),
            input=_path(arguments, "input"),
            metrics=tuple(Metric.parse_list(arguments.get("metrics"))),
            seed=seed,
            levels=tuple(arguments.get("levels", DEFAULT_LEVELS)),
            folds=arguments.get("folds"),
            synthetic=SyntheticSpec(seed=seed),
        )
        return _text("Study finished:", cmd_study(config))


class ToolRouter:
    """Routes tool calls to appropriate handlers."""

    def __init__(self):
        """Initialize router with all handlers."""
        self.model_handlers = ModelHandlers()
        self.report_handlers = ReportHandlers()

        # Map tool names to handler methods
        self.routes = {
            # Model tools
            "train_model": self.model_handlers.handle_train_model,
            "classify_samples": self.model_handlers.handle_classify_samples,
            # Report tools
            "explain_model": self.report_handlers.handle_explain_model,
            "synthesize_dataset": self.report_handlers.handle_synthesize_dataset,
            "run_study": self.report_handlers.handle_run_study,
        }

    async def route(self, name: str, arguments: dict[str, Any]) -> list[TextContent]:
        """Route a tool call to the appropriate handler."""
        if name not in self.routes:
            return [TextContent(type="text", text=f"Unknown tool: {name}")]

        try:
            return await self.routes[name](arguments or {})
        except (ValueError, OSError) as e:
            return [TextContent(type="text", text=f"Error: {str(e)}")]
        except Exception as e:
            return [TextContent(type="text", text=f"Unexpected error: {str(e)}")]

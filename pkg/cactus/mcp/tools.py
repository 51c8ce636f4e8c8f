"""Tool definitions for the CACTUS MCP server."""

from mcp.types import Tool

METRICS_PROPERTY = {
    "type": "array",
    "items": {"type": "string", "enum": ["CPB", "CDG", "CPR"]},
    "description": "Metrics to use (default all three)",
}
SEED_PROPERTY = {"type": "integer", "description": "Root seed (default 0)"}


def get_model_tools() -> list[Tool]:
    """Get training and classification tools."""
    return [
        Tool(
            name="train_model",
            description="Train a CACTUS model on a labelled CSV file and write model.json, "
            "train_report.json and abstraction.csv to the output directory",
            inputSchema={
                "type": "object",
                "properties": {
                    "input": {"type": "string", "description": "Labelled CSV file"},
                    "out": {"type": "string", "description": "Output directory"},
                    "schema": {"type": "string", "description": "Schema config JSON"},
                    "exclude": {
                        "type": "array",
                        "items": {"type": "string"},
                        "description": "Features to exclude",
                    },
                    "max_missing": {
                        "type": "number",
                        "description": "Drop features missing in a larger fraction of rows",
                    },
                    "damping": {"type": "number", "description": "PageRank damping factor"},
                },
                "required": ["input", "out"],
            },
        ),
        Tool(
            name="classify_samples",
            description="Classify the rows of a CSV file with a trained model; writes "
            "predictions_<metric>.csv with label, confidence and per-class costs",
            inputSchema={
                "type": "object",
                "properties": {
                    "model": {"type": "string", "description": "Model JSON file"},
                    "input": {"type": "string", "description": "CSV file to classify"},
                    "out": {"type": "string", "description": "Output directory"},
                    "metrics": METRICS_PROPERTY,
                },
                "required": ["model", "input", "out"],
            },
        ),
    ]


def get_report_tools() -> list[Tool]:
    """Get explanation and evaluation tools."""
    return [
        Tool(
            name="explain_model",
            description="Emit feature rank and confidence reports (JSON, CSV, SVG) for a "
            "model on a labelled dataset",
            inputSchema={
                "type": "object",
                "properties": {
                    "model": {"type": "string", "description": "Model JSON file"},
                    "input": {"type": "string", "description": "Labelled CSV file"},
                    "out": {"type": "string", "description": "Output directory"},
                    "metrics": METRICS_PROPERTY,
                    "top_k": {"type": "integer", "description": "Features per rank report"},
                },
                "required": ["model", "input", "out"],
            },
        ),
        Tool(
            name="synthesize_dataset",
            description="Generate a synthetic labelled dataset with a matching schema config",
            inputSchema={
                "type": "object",
                "properties": {
                    "out": {"type": "string", "description": "Output directory"},
                    "rows": {"type": "integer", "description": "Number of rows"},
                    "seed": SEED_PROPERTY,
                },
                "required": ["out"],
            },
        ),
        Tool(
            name="run_study",
            description="Cross-validate CACTUS at increasing fractions of removed values "
            "against a majority-class baseline",
            inputSchema={
                "type": "object",
                "properties": {
                    "out": {"type": "string", "description": "Output directory"},
                    "input": {
                        "type": "string",
                        "description": "Labelled CSV file (synthetic data when omitted)",
                    },
                    "levels": {
                        "type": "array",
                        "items": {"type": "number"},
                        "description": "Removal fractions in [0, 1)",
                    },
                    "metrics": METRICS_PROPERTY,
                    "folds": {"type": "integer", "description": "Cross-validation folds"},
                    "seed": SEED_PROPERTY,
                },
                "required": ["out"],
            },
        ),
    ]


def get_all_tools() -> list[Tool]:
    """Get all available tools."""
    return get_model_tools() + get_report_tools()

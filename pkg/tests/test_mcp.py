"""Tests for the MCP tool surface."""

import asyncio

import pytest

from cactus.mcp.handlers import ToolRouter
from cactus.mcp.tools import get_all_tools
from cactus.mcp_server import create_server


@pytest.fixture
def router():
    """Create a tool router."""
    return ToolRouter()


def call(router, name, arguments):
    return asyncio.run(router.route(name, arguments))[0].text


class TestTools:
    """Test tool definitions and routing."""

    def test_every_tool_is_routed(self, router):
        """Test that each listed tool has a handler."""
        names = {tool.name for tool in get_all_tools()}

        assert names == set(router.routes)
        assert names == {
            "train_model",
            "classify_samples",
            "explain_model",
            "synthesize_dataset",
            "run_study",
        }

    def test_unknown_tool(self, router):
        """Test calling a tool that does not exist."""
        assert call(router, "delete_everything", {}) == "Unknown tool: delete_everything"

    def test_synthesize_then_train(self, router, tmp_path):
        """Test generating data and training on it through tools."""
        text = call(router, "synthesize_dataset", {"out": str(tmp_path / "data"), "rows": 200})
        assert text.startswith("Dataset generated:")
        assert (tmp_path / "data" / "synthetic.csv").exists()

        text = call(
            router,
            "train_model",
            {
                "input": str(tmp_path / "data" / "synthetic.csv"),
                "schema": str(tmp_path / "data" / "synthetic_schema.json"),
                "out": str(tmp_path / "train"),
            },
        )
        assert text.startswith("Model trained:")
        assert (tmp_path / "train" / "model.json").exists()

    def test_errors_are_reported(self, router, tmp_path):
        """Test that failures come back as error text."""
        text = call(router, "train_model", {"input": str(tmp_path / "absent.csv"), "out": str(tmp_path)})
        assert text.startswith("Error: CSV file not found")

        text = call(
            router,
            "classify_samples",
            {"model": str(tmp_path / "m.json"), "input": "x.csv", "out": str(tmp_path), "metrics": ["XYZ"]},
        )
        assert text.startswith("Error:")


class TestServer:
    """Test the stdio server wiring."""

    def test_create_server(self, router):
        """Test building the server around a router."""
        server = create_server(router)

        assert server.name == "cactus"

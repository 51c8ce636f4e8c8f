"""MCP (Model Context Protocol) server modules for CACTUS."""

from cactus.mcp.handlers import ToolRouter
from cactus.mcp.tools import get_all_tools

__all__ = ["ToolRouter", "get_all_tools"]

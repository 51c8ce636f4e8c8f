"""MCP server for CACTUS.

Training, classification, explanation and evaluation are exposed as tools
over stdio. Tool definitions and handlers live in cactus.mcp; the handlers
call the same command functions as the CLI.
"""

import asyncio
import logging
import os
import sys
from typing import Any

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from cactus.cli import LOG_FORMAT, LOG_LEVEL_ENV
from cactus.mcp.handlers import ToolRouter
from cactus.mcp.tools import get_all_tools

logger = logging.getLogger(__name__)


def create_server(router: ToolRouter | None = None) -> Server:
    """Build the server with its tool listing and call routing registered."""
    server = Server("cactus")
    router = router or ToolRouter()

    @server.list_tools()
    async def list_tools() -> list[Tool]:
        return get_all_tools()

    @server.call_tool()
    async def call_tool(name: str, arguments: Any) -> list[TextContent]:
        logger.info("Tool call: %s", name)
        return await router.route(name, arguments)

    return server


async def serve(server: Server) -> None:
    """Run the server over stdio until the client disconnects."""
    async with stdio_server() as (read_stream, write_stream):
        await server.run(read_stream, write_stream, server.create_initialization_options())


def main():
    """Entry point for the cactus-mcp script."""
    # stdout carries the protocol
    logging.basicConfig(
        level=os.environ.get(LOG_LEVEL_ENV, "INFO").upper(), format=LOG_FORMAT, stream=sys.stderr
    )
    asyncio.run(serve(create_server()))


if __name__ == "__main__":
    main()

"""Utility functions for the CACTUS pipeline."""

import json
import math
import os
import zlib
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from cactus.errors import ConfigError

THREADS_ENV = "CACTUS_THREADS"


def derive_seed(root: int, *keys: Union[str, int, float]) -> int:
    """Derive an independent seed for one consumer of a root seed.

    Args:
        root: Root seed of the invocation
        *keys: Stable identifiers of the consumer (e.g. "fragment", 2)

    Returns:
        32-bit seed, identical for identical (root, keys)
    """
    # crc32 keeps string keys stable across interpreter runs (hash() is salted)
    entropy = [int(root) & 0xFFFFFFFF]
    for key in keys:
        entropy.append(zlib.crc32(repr(key).encode("utf-8")))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def resolve_threads(requested: Optional[int] = None) -> int:
    """Resolve the worker count, capped by the CACTUS_THREADS variable.

    Args:
        requested: Explicit worker count (None to use the environment only)

    Returns:
        Number of workers, at least 1
    """
    raw = os.environ.get(THREADS_ENV, "").strip()
    cap = 1
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'") from None
        if cap < 0:
            raise ConfigError(f"{THREADS_ENV} must be >= 0, got {cap}")
        cap = max(cap, 1)
    if requested is None:
        return cap
    if requested < 1:
        raise ConfigError(f"worker count must be >= 1, got {requested}")
    return min(requested, cap)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and enums into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def dumps_json(data: Any) -> str:
    """Serialize to deterministic JSON text (sorted keys, fixed indent)."""
    return json.dumps(to_jsonable(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path: Union[str, Path], data: Any) -> Path:
    """Write deterministic JSON to a file and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data), encoding="utf-8")
    return path


def read_json(path: Union[str, Path]) -> Any:
    """Read a JSON document.

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: If the content is not valid JSON
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"JSON file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}") from e

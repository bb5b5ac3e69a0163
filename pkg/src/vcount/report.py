"""Report envelope shared by every CLI subcommand, and the shipped JSON schema."""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

TOOL = "vcount"
SCHEMA_VERSION = 1

# Keys that legitimately differ between otherwise identical runs. ``runtime``
# holds execution settings (worker count) that never change the result.
TIMING_KEYS = frozenset({"wall_time_s", "elapsed", "runtime"})


def envelope(
    command: str,
    config: dict[str, Any],
    result: dict[str, Any],
    wall_time: float,
    runtime: dict[str, Any] | None = None,
) -> dict[str, Any]:
    from . import __version__

    return {
        "tool": TOOL,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "wall_time_s": wall_time,
        "runtime": runtime or {},
        "result": result,
    }


def load_schema() -> dict[str, Any]:
    text = resources.files("vcount").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def strip_timing(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj

"""Deterministic CSV/JSON artifacts, written atomically.

Every CSV starts with ``#`` provenance lines (tool name, version, subcommand
and the echoed run config) followed by a header row and data rows. Numbers
use 15 significant digits and lines end in LF, so identical runs produce
byte-identical files.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any
import json
import logging
import math
import os
import tempfile

from t3k import TOOL_NAME, __version__
from t3k.runconfig import RunConfig, dump_config, parse_config

logger = logging.getLogger(__name__)

Cell = float | int | str | bool | None


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".15g")
    return str(value)


def provenance_header(subcommand: str, config: RunConfig) -> list[str]:
    lines = [f"# {TOOL_NAME} {__version__} {subcommand}"]
    for line in dump_config(config).splitlines():
        lines.append(f"# {line}" if line else "#")
    return lines


def render_csv(
    columns: Sequence[str], rows: Iterable[Sequence[Cell]], header: Sequence[str] = ()
) -> str:
    lines = list(header)
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        lines.append(",".join(format_cell(cell) for cell in row))
    return "\n".join(lines) + "\n"


def atomic_write(path: Path, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    logger.debug(f"Wrote {path} ({len(text)} bytes)")
    return path


def write_csv(
    path: Path,
    subcommand: str,
    config: RunConfig,
    columns: Sequence[str],
    rows: Iterable[Sequence[Cell]],
) -> Path:
    return atomic_write(path, render_csv(columns, rows, provenance_header(subcommand, config)))


def write_json(path: Path, payload: dict[str, Any]) -> Path:
    """Pretty JSON with sorted keys; non-finite floats are rejected."""
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"
    return atomic_write(path, text)


def read_echoed_config(text: str) -> RunConfig:
    """Recover the RunConfig echoed in a CSV provenance header."""
    lines = text.splitlines()
    echoed = []
    for line in lines[1:]:
        if not line.startswith("#"):
            break
        echoed.append(line[2:] if line.startswith("# ") else line[1:])
    return parse_config("\n".join(echoed))

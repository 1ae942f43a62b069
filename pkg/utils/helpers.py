import os
import json
import math
import asyncio
import logging
from typing import Any, Union

import aiofiles

from utils.errors import ProblemFormatError

logger = logging.getLogger("Helpers")

def ensure_directory_exists(directory_path: str) -> None:
    """Ensure that the given directory exists. Create it if it doesn't."""
    if directory_path:
        os.makedirs(directory_path, exist_ok=True)

def parse_extended_real(value: Union[str, int, float]) -> float:
    """Parse a JSON number or one of the strings "inf", "-inf", "+inf"."""
    if isinstance(value, bool):
        raise ValueError(f"Expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip().lower()
    if text in ("inf", "+inf", "infinity", "+infinity"):
        return math.inf
    if text in ("-inf", "-infinity"):
        return -math.inf
    raise ValueError(f"Expected a number or 'inf'/'-inf', got {value!r}")

def format_extended_real(value: float) -> Union[str, float]:
    """Inverse of parse_extended_real for JSON output."""
    if value == math.inf:
        return "inf"
    if value == -math.inf:
        return "-inf"
    return float(value)

def dump_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, fixed indentation."""
    return json.dumps(data, sort_keys=True, indent=2)

async def read_json_file(path: str) -> Any:
    """Read and parse a JSON file; syntax errors carry line/column diagnostics."""
    try:
        async with aiofiles.open(path, "r") as f:
            text = await f.read()
    except OSError as e:
        raise ProblemFormatError(f"Cannot read {path}: {e.strerror}")

    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"Malformed JSON in {path}: {e.msg}", line=e.lineno, column=e.colno)

async def write_text_file(path: str, text: str, max_retries: int = 3) -> None:
    """Write a report file, retrying transient failures with a growing delay."""
    ensure_directory_exists(os.path.dirname(path))
    retry_delay = 0.2
    last_error = None
    for attempt in range(max_retries):
        try:
            async with aiofiles.open(path, "w") as f:
                await f.write(text)
            return
        except OSError as e:
            last_error = e
            if attempt < max_retries - 1:
                await asyncio.sleep(retry_delay)
                retry_delay *= 2

    logger.error(f"Failed to write {path} after {max_retries} attempts: {last_error}")
    raise ProblemFormatError(f"Cannot write {path}: {last_error}")

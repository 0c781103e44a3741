"""Deterministic CSV and JSON writers.

Floats are written with 17 significant digits so identical runs produce
byte-identical files.  Every CSV ends with a metadata comment line.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "%.17g" % value
    if hasattr(value, "dtype"):
        return format_value(value.item())
    return str(value)


def metadata_line(q: Any = None) -> str:
    q_txt = "n/a" if q is None else (format_value(float(q)) if not isinstance(q, str) else q)
    return f"# q={q_txt}, version={__version__}, seed=deterministic"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]], q: Any = None) -> int:
    """Write ``rows`` under ``header``; returns the number of data rows."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
            count += 1
        fh.write(metadata_line(q) + "\n")
    return count


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "dtype"):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def write_json(path, obj: Any) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n", encoding="ascii")


def read_csv(path) -> tuple[list[str], list[list[str]], str]:
    """Split a file written by :func:`write_csv` into header and rows, plus the metadata line."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:] if not ln.startswith("#")]
    meta = lines[-1]
    return header, rows, meta

"""
CSV reading and writing with exact float round-trip.

Floats are written with 17 significant digits, which parse back to the same
double. Row order and formatting are fixed so identical inputs give
byte-identical files.
"""

import csv
import math
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

from src.utils.logger import log_artifact_written


FLOAT_FORMAT = ".17g"

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    """Format one cell: bools as 0/1, floats at 17 significant digits."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, FLOAT_FORMAT)
    if hasattr(value, "item"):
        return format_value(value.item())
    return str(value)


def write_rows(
    path: PathLike,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
) -> int:
    """
    Write a header and rows to ``path``.

    Returns:
        int: Number of data rows written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    log_artifact_written(str(path), count)
    return count


def read_rows(path: PathLike) -> tuple[List[str], List[List[float]]]:
    """
    Read a numeric CSV written by :func:`write_rows`.

    Returns:
        Tuple of (header, rows as floats)
    """
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader if row]
    return header, rows

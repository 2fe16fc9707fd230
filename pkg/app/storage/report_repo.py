#!/usr/bin/env python3
"""Repository for evaluation outputs: per-scene report CSV, summary CSV, traces."""

import csv
import io
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from app.storage.file_guard import write_bytes_guarded


def format_value(value) -> str:
    """Floats use repr (round-trip exact; infinity renders as 'inf')."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)


def encode_csv(columns: Sequence[str], rows: Iterable[Sequence], comments: List[str] = ()) -> bytes:
    buffer = io.StringIO()
    for comment in comments:
        buffer.write(f"# {comment}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buffer.getvalue().encode("utf-8")


def write_csv_repo(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence],
    comments: List[str] = (),
    force: bool = False,
) -> Path:
    return write_bytes_guarded(Path(path), encode_csv(columns, rows, comments), force=force)

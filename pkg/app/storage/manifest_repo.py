#!/usr/bin/env python3
"""Repository for the dataset manifest CSV (seed, scene_path, gt_path, mask_path)."""

import csv
import io
from pathlib import Path
from typing import List

from app.core.errors import ManifestError
from app.schemas.manifest import ManifestRow
from app.storage.file_guard import write_bytes_guarded

MANIFEST_COLUMNS = ["seed", "scene_path", "gt_path", "mask_path"]


def write_manifest_repo(rows: List[ManifestRow], path: Path, force: bool = False) -> Path:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=MANIFEST_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.model_dump())
    return write_bytes_guarded(Path(path), buffer.getvalue().encode("utf-8"), force=force)


def _resolve(row: ManifestRow, base: Path) -> ManifestRow:
    updates = {}
    for key in ("scene_path", "gt_path", "mask_path"):
        value = Path(getattr(row, key))
        if not value.is_absolute():
            updates[key] = str(base / value)
    return row.model_copy(update=updates)


def read_manifest_repo(path: Path) -> List[ManifestRow]:
    """Rows in file order. Relative paths resolve against the manifest's directory."""
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest {path} does not exist")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(MANIFEST_COLUMNS) - set(reader.fieldnames):
            raise ManifestError(f"{path}: header must contain {MANIFEST_COLUMNS}")
        rows = [
            _resolve(ManifestRow(**{key: raw[key] for key in MANIFEST_COLUMNS}), path.parent)
            for raw in reader
        ]
    if not rows:
        raise ManifestError(f"{path}: manifest has no scenes")
    return rows

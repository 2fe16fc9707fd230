#!/usr/bin/env python3
"""
Divergence-guarded file writes shared by every repository.

A re-run over an existing output directory must either reproduce every file
byte for byte or fail loudly; it never silently replaces results.
"""

from pathlib import Path

from app.core.errors import OutputDivergence


def write_bytes_guarded(path: Path, data: bytes, force: bool = False) -> Path:
    """
    Write ``data`` to ``path``.

    Identical existing content is left untouched. Different existing content
    raises OutputDivergence unless ``force`` is set.
    """
    path = Path(path)
    if path.exists() and not force:
        if path.read_bytes() == data:
            return path
        raise OutputDivergence(
            f"{path} already exists with different content; re-run with --force to overwrite."
        )
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    return path

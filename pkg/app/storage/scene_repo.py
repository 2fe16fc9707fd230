#!/usr/bin/env python3
"""
Repository for the line-oriented scene text format.

    seed=42
    n=128
    spacing=1.0
    extent=128.0,128.0
    tx=17.25,90.5
    bldg=10.0,12.0,24.0,30.0      (one line per building)

Floats use the shortest round-trip repr, so a file reloads to the identical
scene.
"""

from pathlib import Path

from app.core.errors import ManifestError, MissingInput
from app.schemas.scene import Scene
from app.storage.file_guard import write_bytes_guarded


def _floats(text: str) -> tuple:
    return tuple(float(part) for part in text.split(","))


def encode_scene(scene: Scene) -> str:
    lines = [
        f"seed={scene.seed}",
        f"n={scene.grid_n}",
        f"spacing={scene.spacing_h!r}",
        f"extent={scene.extent_m[0]!r},{scene.extent_m[1]!r}",
        f"tx={scene.tx_pos[0]!r},{scene.tx_pos[1]!r}",
    ]
    lines += [f"bldg={','.join(repr(float(c)) for c in rect)}" for rect in scene.buildings]
    return "\n".join(lines) + "\n"


def decode_scene(text: str, source: str = "<text>") -> Scene:
    fields = {}
    buildings = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ManifestError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        if key == "bldg":
            buildings.append(_floats(value))
        elif key in ("seed", "n", "spacing", "extent", "tx"):
            fields[key] = value
        else:
            raise ManifestError(f"{source}:{lineno}: unknown scene key {key!r}")

    missing = {"seed", "n", "spacing", "extent", "tx"} - fields.keys()
    if missing:
        raise ManifestError(f"{source}: missing scene keys {sorted(missing)}")

    return Scene(
        seed=int(fields["seed"]),
        grid_n=int(fields["n"]),
        spacing_h=float(fields["spacing"]),
        extent_m=_floats(fields["extent"]),
        buildings=buildings,
        tx_pos=_floats(fields["tx"]),
    )


def write_scene_repo(scene: Scene, path: Path, force: bool = False) -> Path:
    return write_bytes_guarded(Path(path), encode_scene(scene).encode("utf-8"), force=force)


def read_scene_repo(path: Path) -> Scene:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"{path} does not exist")
    return decode_scene(path.read_text(encoding="utf-8"), source=str(path))

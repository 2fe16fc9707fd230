#!/usr/bin/env python3
"""Dataset manifest schema: one row per generated scene."""

from pydantic import BaseModel


class ManifestRow(BaseModel):
    seed: int
    scene_path: str
    gt_path: str
    mask_path: str

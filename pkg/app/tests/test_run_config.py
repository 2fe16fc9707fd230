#!/usr/bin/env python3
"""Config file parsing, validation and source precedence."""

from pathlib import Path

import pytest

from app.cli.utils import resolve_config
from app.core.errors import ConfigError
from app.core.run_config import load_run_config, parse_config_text
from app.schemas.edge import GuidanceMethod
from app.schemas.recon import GuidanceLift


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


# ── parse_config_text ──

def test_parse_nested_keys_skips_comments_and_blanks():
    text = "# experiment\n\nseed = 7\n  scene.count = 3  \nsr.lambda_smooth=0.2\n"
    assert parse_config_text(text) == {"seed": "7", "scene": {"count": "3"}, "sr": {"lambda_smooth": "0.2"}}


@pytest.mark.parametrize("text", [
    "seed 7",
    "1seed = 7",
    "scene..count = 3",
    "seed = 7\nseed = 8",
    "scene = 1\nscene.count = 3",
    "scene.count = 3\nscene = 1",
])
def test_parse_rejects_malformed_lines(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_parse_error_names_source_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("seed = 1\noops\n", source="exp.cfg")
    assert exc.value.detail.startswith("exp.cfg:2:")


# ── load_run_config ──

def test_defaults_without_file():
    run = load_run_config(None)
    assert run.seed == 0 and run.stride_s == 4 and run.workers == 1
    assert run.methods == [GuidanceMethod.KEDGE, GuidanceMethod.LBP, GuidanceMethod.CANNY, GuidanceMethod.BASE]


def test_file_values_are_coerced(tmp_path):
    path = _write(tmp_path / "exp.cfg", "seed = 9\nscene.count = 2\nsr.lambda_helm = 0.1\nmethods = kedge, base\n")
    run = load_run_config(path)
    assert run.seed == 9
    assert run.scene.count == 2
    assert run.sr.lambda_helm == 0.1
    assert run.methods == [GuidanceMethod.KEDGE, GuidanceMethod.BASE]


def test_realistic_k_and_guidance_lift_keys(tmp_path):
    assert load_run_config(None).realistic_k is False
    path = _write(tmp_path / "exp.cfg", "realistic_k = true\nsr.guidance_lift = bilinear\n")
    run = load_run_config(path)
    assert run.realistic_k is True
    assert run.sr.guidance_lift is GuidanceLift.BILINEAR
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path / "bad.cfg", "sr.guidance_lift = nearest\n"))


@pytest.mark.parametrize("text", [
    "sedd = 1",
    "sr.lambda_smoth = 0.1",
    "stride_s = 0",
    "methods = kedge, kedge",
    "methods = sobel",
])
def test_invalid_values_raise_config_error(tmp_path, text):
    with pytest.raises(ConfigError):
        load_run_config(_write(tmp_path / "bad.cfg", text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.cfg")


def test_overrides_replace_file_values_and_skip_none(tmp_path):
    path = _write(tmp_path / "exp.cfg", "seed = 9\nscene.count = 5\n")
    run = load_run_config(path, {"seed": None, "scene.count": 2, "ddm.steps": 10})
    assert run.seed == 9
    assert run.scene.count == 2
    assert run.ddm.steps == 10


# ── precedence ──

def test_workers_precedence_file_env_flag(tmp_path, monkeypatch):
    path = _write(tmp_path / "exp.cfg", "workers = 2\n")
    assert resolve_config(path).workers == 2
    monkeypatch.setenv("RMSUP_WORKERS", "3")
    assert resolve_config(path).workers == 3
    assert resolve_config(path, workers=4).workers == 4


def test_invalid_workers_env(monkeypatch):
    monkeypatch.setenv("RMSUP_WORKERS", "0")
    with pytest.raises(ConfigError):
        resolve_config(None)
    monkeypatch.setenv("RMSUP_WORKERS", "many")
    with pytest.raises(ConfigError):
        resolve_config(None)

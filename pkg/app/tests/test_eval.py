#!/usr/bin/env python3
"""Metrics, the per-method summary and the comparison harness."""

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from app.core.errors import DimensionMismatch, GridTooSmall, ZeroReference
from app.schemas.edge import GuidanceMethod
from app.schemas.grid import Grid2D
from app.schemas.manifest import ManifestRow
from app.schemas.metrics import MetricsReport
from app.schemas.recon import SrConfig
from app.schemas.run_config import RunConfig
from app.schemas.scene import SceneConfig
from app.services.eval_services import (
    iou,
    metrics_report,
    nmse,
    panel_pixels,
    psnr,
    rmse,
    run_comparison,
    ssim,
    summarize,
)
from app.services.grid_services import read_rmg
from app.services.pipeline_services import cmd_gen


def _read_csv(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _absolute(rows, out):
    return [row.model_copy(update={"gt_path": str(out / row.gt_path), "mask_path": str(out / row.mask_path)})
            for row in rows]


# ── metrics ──

def test_rmse_and_shape_check():
    assert rmse(np.array([[0.0, 1.0]]), np.zeros((1, 2))) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(DimensionMismatch):
        rmse(np.zeros((2, 2)), np.zeros((2, 3)))


def test_nmse(rng):
    p = rng.uniform(0.1, 1.0, size=(8, 8))
    assert nmse(p, p) == 0.0
    assert nmse(2.0 * p, p) == pytest.approx(1.0)
    with pytest.raises(ZeroReference):
        nmse(p, np.zeros((8, 8)))


def test_psnr():
    p = np.full((4, 4), 0.5)
    assert psnr(p, p) == math.inf
    assert psnr(p + 0.1, p) == pytest.approx(20.0, abs=1e-9)


def test_ssim_identical_constant_and_inverted(rng):
    a = rng.uniform(size=(16, 16))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    assert ssim(np.full((12, 12), 0.3), np.full((12, 12), 0.3)) == pytest.approx(1.0)
    assert ssim(a, 1.0 - a) < 0.0
    assert -1.0 <= ssim(a, rng.uniform(size=(16, 16))) <= 1.0


def test_ssim_needs_a_full_window():
    with pytest.raises(GridTooSmall):
        ssim(np.zeros((10, 10)), np.zeros((10, 10)))


def test_iou():
    assert iou(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0
    a = np.array([[0.5, 0.5, 0.0, 0.0]])
    b = np.array([[0.5, 0.0, 0.5, 0.0]])
    assert iou(a, b) == pytest.approx(1.0 / 3.0)
    assert iou(np.array([[10.0 / 255.0]]), np.array([[1.0]])) == 1.0


def test_metrics_report_for_perfect_reconstruction(rng):
    p = Grid2D.from_array(rng.uniform(size=(16, 16)))
    report = metrics_report(p, p, GuidanceMethod.KEDGE, 5)
    assert report.rmse == 0.0 and report.nmse == 0.0
    assert report.psnr_db == math.inf
    assert report.ssim == pytest.approx(1.0)
    assert report.iou == 1.0


def test_iou_is_scored_against_the_building_mask():
    gt = np.full((16, 16), 0.5)
    mask = np.zeros((16, 16))
    mask[4:8, 4:8] = 1.0
    gt[mask == 1.0] = 0.0
    # free space behind several walls, below the 10/255 threshold
    gt[12, 12] = 0.02

    against_gt = metrics_report(gt, gt, GuidanceMethod.KEDGE, 5)
    against_mask = metrics_report(gt, gt, GuidanceMethod.KEDGE, 5, building_mask=mask)
    free = 256 - 16
    assert against_gt.iou == 1.0
    assert against_mask.iou == pytest.approx((free - 1) / free)
    assert against_mask.nmse == against_gt.nmse == 0.0


# ── summary ──

def _row(method, seed, rmse_value, psnr_value=30.0):
    return MetricsReport(scene_seed=seed, method_label=method, rmse=rmse_value, nmse=0.1,
                         ssim=0.9, psnr_db=psnr_value, iou=0.8)


def test_summary_statistics():
    rows = [_row(GuidanceMethod.KEDGE, 1, 0.1), _row(GuidanceMethod.KEDGE, 2, 0.3),
            _row(GuidanceMethod.BASE, 1, 0.2, math.inf)]
    summary = {(r.method, r.metric): r for r in summarize(rows)}
    assert len(summary) == 4 * 5
    kedge = summary[(GuidanceMethod.KEDGE, "rmse")]
    assert kedge.mean == pytest.approx(0.2)
    assert kedge.std == pytest.approx(math.sqrt(0.02))
    assert kedge.n == 2
    single = summary[(GuidanceMethod.BASE, "rmse")]
    assert single.std == 0.0
    lossless = summary[(GuidanceMethod.BASE, "psnr_db")]
    assert lossless.mean == math.inf and math.isnan(lossless.std)
    empty = summary[(GuidanceMethod.LBP, "rmse")]
    assert empty.n == 0 and math.isnan(empty.mean)


# ── harness ──

def test_panel_layout():
    gt = Grid2D.from_array(np.full((4, 4), 0.2))
    panel = panel_pixels(gt, Grid2D.from_array(np.ones((4, 4))), Grid2D.from_array(np.full((4, 4), 0.5)))
    assert panel.shape == (4, 14)
    assert np.all(panel.values[:, 4] == 0.0) and np.all(panel.values[:, 9] == 0.0)


def test_comparison_writes_rows_in_manifest_order(small_run_config):
    manifest = cmd_gen(small_run_config)
    out = small_run_config.output_dir
    manifest = _absolute(manifest, out)
    report = run_comparison(manifest, s=4, sr_config=small_run_config.sr, out_dir=out)

    assert report.ok
    assert [(r.scene_seed, r.method_label) for r in report.rows] == [
        (row.seed, m) for row in manifest
        for m in (GuidanceMethod.KEDGE, GuidanceMethod.LBP, GuidanceMethod.CANNY, GuidanceMethod.BASE)
    ]
    assert len(_read_csv(out / "report.csv")) == 8
    assert len(_read_csv(out / "summary.csv")) == 20
    assert "# ssim_window=11" in (out / "summary.csv").read_text()

    kedge_row = report.rows[0]
    mask = read_rmg(Path(manifest[0].mask_path))
    assert kedge_row.iou == iou(read_rmg(out / f"phat_kedge_{manifest[0].seed}.rmg"), 1.0 - mask.values)

    seed = manifest[0].seed
    for name in (f"plr_{seed}.rmg", f"k_kedge_{seed}.rmg", f"klr_kedge_{seed}.rmg",
                 f"phat_kedge_{seed}.rmg", f"panel_kedge_{seed}.pgm", f"phat_base_{seed}.rmg"):
        assert (out / name).is_file()
    assert not (out / f"k_base_{seed}.rmg").exists()


def test_comparison_is_independent_of_worker_count(tmp_path, small_run_config):
    manifest = cmd_gen(small_run_config)
    src = small_run_config.output_dir
    manifest = _absolute(manifest, src)
    sr_config = SrConfig(max_iters=30)
    run_comparison(manifest, s=4, sr_config=sr_config, workers=1, out_dir=tmp_path / "serial")
    run_comparison(manifest, s=4, sr_config=sr_config, workers=2, out_dir=tmp_path / "pool")
    for name in ("report.csv", "summary.csv"):
        assert (tmp_path / "serial" / name).read_bytes() == (tmp_path / "pool" / name).read_bytes()


def test_comparison_records_failed_tasks(tmp_path, small_run_config):
    manifest = cmd_gen(small_run_config)
    src = small_run_config.output_dir
    good = _absolute(manifest[:1], src)[0]
    missing = ManifestRow(seed=99, scene_path="x.txt", gt_path=str(tmp_path / "nope.rmg"), mask_path="m.rmg")
    out = tmp_path / "eval"
    report = run_comparison([good, missing], methods=[GuidanceMethod.BASE], s=4,
                            sr_config=SrConfig(max_iters=10), out_dir=out)
    assert not report.ok
    assert [f.scene_seed for f in report.failures] == [99]
    assert len(report.rows) == 1
    assert "# failed seed=99 method=base" in (out / "report.csv").read_text()


@pytest.mark.slow
def test_kedge_guidance_beats_no_guidance_across_a_corpus(tmp_path):
    config = RunConfig(seed=2024, stride_s=4, output_dir=tmp_path / "corpus", scene=SceneConfig(count=20))
    assert config.scene.grid_n == 128
    manifest = _absolute(cmd_gen(config), config.output_dir)
    kedge, base = GuidanceMethod.KEDGE, GuidanceMethod.BASE
    report = run_comparison(manifest, methods=[kedge, base], s=4, sr_config=SrConfig())
    assert report.ok

    rows = {(r.scene_seed, r.method_label): r for r in report.rows}
    seeds = [row.seed for row in manifest]
    wins = sum(rows[(seed, kedge)].nmse < rows[(seed, base)].nmse for seed in seeds)
    assert wins >= 0.8 * len(seeds)

    def mean(method, metric):
        return np.mean([getattr(rows[(seed, method)], metric) for seed in seeds])

    assert mean(kedge, "nmse") <= mean(base, "nmse")
    assert mean(kedge, "iou") >= mean(base, "iou")

#!/usr/bin/env python3
# app/services/eval_services.py
"""
Map-quality metrics and the guidance comparison harness.

The harness evaluates every scene × method pair independently (optionally in
a process pool) and merges results in manifest order, so output files do not
depend on the worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from skimage.metrics import structural_similarity

from app.core.errors import DimensionMismatch, GridTooSmall, RMSupError, ZeroReference
from app.core.logging_config import logger, method_var, scene_seed_var
from app.schemas.edge import EdgeParams, GuidanceMethod
from app.schemas.grid import Grid2D, RadioMap
from app.schemas.manifest import ManifestRow
from app.schemas.metrics import METRIC_NAMES, ComparisonReport, MetricsReport, SummaryRow, TaskFailure
from app.schemas.recon import SrConfig
from app.services.grid_services import denormalize, grid_to_mask, read_rmg, write_pgm, write_rmg
from app.services.recon_services import guidance_from_method, guidance_mask, lift_guidance, reconstruct
from app.services.resample_services import make_lr_pair, uniform_downsample
import app.storage.report_repo as report_repo

MapLike = Union[Grid2D, RadioMap, np.ndarray]

ALL_METHODS = (GuidanceMethod.KEDGE, GuidanceMethod.LBP, GuidanceMethod.CANNY, GuidanceMethod.BASE)

IOU_THRESHOLD = 10.0 / 255.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_RANGE = 1.0

REPORT_COLUMNS = ["seed", "method", "rmse", "nmse", "ssim", "psnr_db", "iou"]
SUMMARY_COLUMNS = ["method", "metric", "mean", "std", "n"]


def _values(m: MapLike) -> np.ndarray:
    if isinstance(m, RadioMap):
        return m.grid.values
    if isinstance(m, Grid2D):
        return m.values
    return np.asarray(m, dtype=np.float64)


def _pair(p_hat: MapLike, p: MapLike):
    a, b = _values(p_hat), _values(p)
    if a.shape != b.shape:
        raise DimensionMismatch(f"map shapes differ: {a.shape} vs {b.shape}")
    return a, b


# ── Metrics ───────────────────────────────────────────────────────────────────

def rmse(p_hat: MapLike, p: MapLike) -> float:
    a, b = _pair(p_hat, p)
    return math.sqrt(float(np.mean((a - b) ** 2)))


def nmse(p_hat: MapLike, p: MapLike) -> float:
    """Σ(P̂ − P)² / Σ P²."""
    a, b = _pair(p_hat, p)
    ref = float(np.sum(b * b))
    if ref == 0.0:
        raise ZeroReference("NMSE is undefined against an all-zero reference map")
    return float(np.sum((a - b) ** 2)) / ref


def psnr(p_hat: MapLike, p: MapLike, max_val: float = 1.0) -> float:
    """10·log10(max² / MSE); identical maps give math.inf."""
    a, b = _pair(p_hat, p)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(max_val * max_val / mse)


def ssim(p_hat: MapLike, p: MapLike) -> float:
    """
    Mean local SSIM with an 11×11 Gaussian window (σ = 1.5), K1 = 0.01,
    K2 = 0.03, L = 1, averaged over the cells whose window fits the grid.
    """
    a, b = _pair(p_hat, p)
    if min(a.shape) < SSIM_WINDOW:
        raise GridTooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} cells, got {a.shape}")
    value = structural_similarity(
        a,
        b,
        data_range=SSIM_RANGE,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=SSIM_K1,
        K2=SSIM_K2,
    )
    return min(1.0, max(-1.0, float(value)))


def iou(p_hat: MapLike, p_gt: MapLike, threshold: float = IOU_THRESHOLD) -> float:
    """Intersection over union of the ≥ threshold foregrounds; two empty sets give 1.0."""
    a, b = _pair(p_hat, p_gt)
    fa, fb = a >= threshold, b >= threshold
    union = int(np.count_nonzero(fa | fb))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(fa & fb)) / union


def ssim_metadata() -> List[str]:
    return [
        f"ssim_window={SSIM_WINDOW}",
        f"ssim_sigma={SSIM_SIGMA}",
        f"ssim_k1={SSIM_K1}",
        f"ssim_k2={SSIM_K2}",
        f"ssim_range={SSIM_RANGE}",
        f"iou_threshold={IOU_THRESHOLD!r}",
    ]


def metrics_report(
    p_hat: MapLike,
    p: MapLike,
    method: GuidanceMethod,
    seed: int,
    building_mask: Optional[MapLike] = None,
) -> MetricsReport:
    """
    All five metrics against the ground truth p. With a building mask, IOU
    compares the reconstruction's foreground with the free-space cells
    (1 − mask) instead of with p's foreground.
    """
    free_space = _values(p) if building_mask is None else 1.0 - _values(building_mask)
    return MetricsReport(
        scene_seed=seed,
        method_label=method,
        rmse=rmse(p_hat, p),
        nmse=nmse(p_hat, p),
        ssim=ssim(p_hat, p),
        psnr_db=psnr(p_hat, p),
        iou=iou(p_hat, free_space),
    )


# ── Summary ───────────────────────────────────────────────────────────────────

def _mean_std(values: Sequence[float]):
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan
    if not np.all(np.isfinite(arr)):
        # Lossless PSNR rows: the mean is infinite and the spread undefined.
        return float(np.mean(arr)), math.nan
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


def summarize(rows: Sequence[MetricsReport], methods: Sequence[GuidanceMethod] = ALL_METHODS) -> List[SummaryRow]:
    """mean ± sample std of every metric per method, in method then metric order."""
    summary = []
    for method in methods:
        method_rows = [r for r in rows if r.method_label == method]
        for metric in METRIC_NAMES:
            mean, std = _mean_std([getattr(r, metric) for r in method_rows])
            summary.append(SummaryRow(method=method, metric=metric, mean=mean, std=std, n=len(method_rows)))
    return summary


# ── Harness ───────────────────────────────────────────────────────────────────

class _Task(NamedTuple):
    seed: int
    gt_path: str
    mask_path: str
    method: GuidanceMethod
    stride: int
    sr_config: SrConfig
    edge_params: EdgeParams
    realistic_k: bool = False


class _Outcome(NamedTuple):
    seed: int
    method: GuidanceMethod
    report: Optional[MetricsReport]
    error: Optional[str]
    p_lr: Optional[Grid2D] = None
    k_hr: Optional[Grid2D] = None
    k_lr: Optional[Grid2D] = None
    lifted: Optional[Grid2D] = None
    p_hat: Optional[Grid2D] = None
    gt: Optional[Grid2D] = None


def _evaluate_task(task: _Task) -> _Outcome:
    """One scene × method evaluation; RMSup errors come back as a failure outcome."""
    seed_token = scene_seed_var.set(str(task.seed))
    method_token = method_var.set(task.method.value)
    try:
        gt = read_rmg(Path(task.gt_path))
        mask = read_rmg(Path(task.mask_path))
        s = task.stride
        k_hr = guidance_from_method(gt, task.method, task.edge_params)
        k_mask = None if k_hr is None else grid_to_mask(k_hr)
        p_lr, k_lr = make_lr_pair(
            gt, k_mask, s,
            realistic=task.realistic_k,
            params=task.edge_params,
            extract=partial(guidance_mask, method=task.method, params=task.edge_params),
        )

        sampled = uniform_downsample(gt, s).values
        bounds = (float(sampled.min()), float(sampled.max()))
        guidance = None if k_hr is None else k_lr
        result = reconstruct(p_lr, guidance, s, task.sr_config)
        p_hat = denormalize(result.p_hat.grid, bounds)
        p_hat = p_hat.with_values(np.clip(p_hat.values, 0.0, 1.0))
        lifted = lift_guidance(k_lr, gt.shape, s, task.sr_config.guidance_lift)

        report = metrics_report(p_hat, gt, task.method, task.seed, building_mask=mask)
        return _Outcome(task.seed, task.method, report, None, p_lr, k_hr, k_lr, lifted, p_hat, gt)
    except RMSupError as exc:
        logger.warning(f"Scene {task.seed} / {task.method.value} failed: {exc.detail}")
        return _Outcome(task.seed, task.method, None, exc.detail)
    finally:
        scene_seed_var.reset(seed_token)
        method_var.reset(method_token)


def panel_pixels(gt: Grid2D, lifted: Grid2D, p_hat: Grid2D) -> Grid2D:
    """Side-by-side GT | guidance | reconstruction, one blank column between panels."""
    gap = np.zeros((gt.height, 1))
    return Grid2D.from_array(
        np.hstack([gt.values, gap, lifted.values, gap, p_hat.values]), spacing_h=gt.spacing_h
    )


def _write_task_outputs(outcome: _Outcome, out_dir: Path, force: bool) -> None:
    method, seed = outcome.method.value, outcome.seed
    write_rmg(outcome.p_lr, out_dir / f"plr_{seed}.rmg", force=force)
    if outcome.k_hr is not None:
        write_rmg(outcome.k_hr, out_dir / f"k_{method}_{seed}.rmg", force=force)
        write_rmg(outcome.k_lr, out_dir / f"klr_{method}_{seed}.rmg", force=force)
    write_rmg(outcome.p_hat, out_dir / f"phat_{method}_{seed}.rmg", force=force)
    write_pgm(panel_pixels(outcome.gt, outcome.lifted, outcome.p_hat), out_dir / f"panel_{method}_{seed}.pgm", force=force)


def run_comparison(
    manifest: Sequence[ManifestRow],
    methods: Sequence[GuidanceMethod] = ALL_METHODS,
    s: int = 4,
    sr_config: SrConfig = SrConfig(),
    edge_params: EdgeParams = EdgeParams(),
    workers: int = 1,
    out_dir: Optional[Path] = None,
    force: bool = False,
    realistic_k: bool = False,
) -> ComparisonReport:
    """
    Evaluate every manifest scene under every method.

    With out_dir, writes per-task maps and panels plus report.csv and
    summary.csv. Failed tasks are recorded on the report, never raised.
    """
    methods = [GuidanceMethod(m) for m in methods]
    tasks = [
        _Task(row.seed, row.gt_path, row.mask_path, method, s, sr_config, edge_params, realistic_k)
        for row in manifest
        for method in methods
    ]
    logger.info(
        f"Running comparison: {len(manifest)} scenes x {len(methods)} methods on {workers} worker(s)",
        extra={"extra": {"stride": s, "methods": [m.value for m in methods], "realistic_k": realistic_k}},
    )

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_evaluate_task, tasks))
    else:
        outcomes = [_evaluate_task(task) for task in tasks]

    report = ComparisonReport()
    for outcome in outcomes:
        if outcome.report is None:
            report.failures.append(TaskFailure(scene_seed=outcome.seed, method=outcome.method, detail=outcome.error))
            continue
        report.rows.append(outcome.report)
        if out_dir is not None:
            _write_task_outputs(outcome, Path(out_dir), force)
    report.summary = summarize(report.rows, methods)

    if out_dir is not None:
        write_reports(report, Path(out_dir), force=force)
    logger.info(
        f"Comparison finished: {len(report.rows)} rows, {len(report.failures)} failures",
        extra={"extra": {"failures": len(report.failures)}},
    )
    return report


def write_reports(report: ComparisonReport, out_dir: Path, force: bool = False) -> Dict[str, Path]:
    comments = [f"failed seed={f.scene_seed} method={f.method.value}: {f.detail}" for f in report.failures]
    report_rows = [
        (r.scene_seed, r.method_label, r.rmse, r.nmse, r.ssim, r.psnr_db, r.iou) for r in report.rows
    ]
    summary_rows = [(r.method, r.metric, r.mean, r.std, r.n) for r in report.summary]
    return {
        "report": report_repo.write_csv_repo(out_dir / "report.csv", REPORT_COLUMNS, report_rows, comments, force),
        "summary": report_repo.write_csv_repo(out_dir / "summary.csv", SUMMARY_COLUMNS, summary_rows, ssim_metadata(), force),
    }

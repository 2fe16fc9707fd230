#!/usr/bin/env python3
# app/services/pipeline_services.py
"""
Command-level workflows behind the CLI: corpus generation, the per-scene
edge → down → sr steps, the full comparison pipeline and the diffusion demo.

All outputs live under one directory with fixed names, so steps can be run
one at a time or chained by ``cmd_pipeline``.
"""

from functools import partial
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from app.core.errors import MomentCheckFailed
from app.core.logging_config import logger, scene_seed_var
from app.schemas.diffusion import DdmDemoConfig
from app.schemas.edge import EdgeParams, GuidanceMethod
from app.schemas.grid import BinaryMask
from app.schemas.manifest import ManifestRow
from app.schemas.metrics import ComparisonReport
from app.schemas.recon import SrConfig, SrResult
from app.schemas.run_config import RunConfig
from app.services.diffusion_services import DemoResult, check_demo_moments, demo_losses, run_ddm_demo
from app.services.eval_services import run_comparison
from app.services.grid_services import grid_to_mask, read_rmg, write_pgm, write_rmg
from app.services.recon_services import guidance_from_method, guidance_mask, reconstruct
from app.services.resample_services import make_lr_pair
from app.services.scenegen_services import building_mask, gen_scene, simulate_pathloss
from app.utils.prng import derive_seeds
import app.storage.manifest_repo as manifest_repo
import app.storage.report_repo as report_repo
import app.storage.scene_repo as scene_repo

MANIFEST_NAME = "manifest.csv"


def scene_paths(out_dir: Path, seed: int) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    return {
        "scene": out_dir / f"scene_{seed}.txt",
        "gt": out_dir / f"gt_{seed}.rmg",
        "gt_pgm": out_dir / f"gt_{seed}.pgm",
        "mask": out_dir / f"mask_{seed}.rmg",
        "plr": out_dir / f"plr_{seed}.rmg",
    }


def method_paths(out_dir: Path, seed: int, method: GuidanceMethod) -> Dict[str, Path]:
    out_dir, m = Path(out_dir), GuidanceMethod(method).value
    return {
        "k": out_dir / f"k_{m}_{seed}.rmg",
        "k_pgm": out_dir / f"k_{m}_{seed}.pgm",
        "klr": out_dir / f"klr_{m}_{seed}.rmg",
        "phat": out_dir / f"phat_{m}_{seed}.rmg",
        "phat_pgm": out_dir / f"phat_{m}_{seed}.pgm",
        "trace": out_dir / f"energy_trace_{m}_{seed}.csv",
    }


# ── gen ───────────────────────────────────────────────────────────────────────

def cmd_gen(config: RunConfig, force: bool = False) -> List[ManifestRow]:
    """Generate ``scene.count`` scenes with their GT maps and masks, plus the manifest."""
    out_dir = Path(config.output_dir)
    rows: List[ManifestRow] = []
    for seed in derive_seeds(config.seed, config.scene.count):
        token = scene_seed_var.set(str(seed))
        try:
            scene = gen_scene(seed, config.scene)
            radio_map, _ = simulate_pathloss(scene, config.propagation)
            paths = scene_paths(out_dir, seed)
            scene_repo.write_scene_repo(scene, paths["scene"], force=force)
            write_rmg(radio_map.grid, paths["gt"], force=force)
            write_pgm(radio_map.grid, paths["gt_pgm"], force=force)
            write_rmg(building_mask(scene), paths["mask"], force=force, spacing_h=scene.spacing_h)
        finally:
            scene_seed_var.reset(token)
        rows.append(ManifestRow(
            seed=seed,
            scene_path=paths["scene"].name,
            gt_path=paths["gt"].name,
            mask_path=paths["mask"].name,
        ))

    manifest_repo.write_manifest_repo(rows, out_dir / MANIFEST_NAME, force=force)
    logger.info(
        f"Generated {len(rows)} scenes under {out_dir}",
        extra={"extra": {"run_seed": config.seed, "grid_n": config.scene.grid_n}},
    )
    return rows


# ── edge / down / sr (single scene) ───────────────────────────────────────────

def cmd_edge(out_dir: Path, seed: int, method: GuidanceMethod, params: EdgeParams = EdgeParams(),
             force: bool = False) -> Optional[BinaryMask]:
    """Guidance mask of gt_<seed> for one method; BASE writes nothing."""
    gt = read_rmg(scene_paths(out_dir, seed)["gt"])
    k = guidance_from_method(gt, method, params)
    if k is None:
        return None
    mask = grid_to_mask(k)
    paths = method_paths(out_dir, seed, method)
    write_rmg(k, paths["k"], force=force)
    write_pgm(mask, paths["k_pgm"], force=force)
    return mask


def cmd_down(out_dir: Path, seed: int, method: GuidanceMethod, s: int, force: bool = False,
             realistic_k: bool = False, params: EdgeParams = EdgeParams()) -> None:
    """
    LR pair of gt_<seed>, using k_<method>_<seed> when the method has guidance.
    With realistic_k the guidance is re-extracted from the upsampled P_LR.
    """
    method = GuidanceMethod(method)
    gt = read_rmg(scene_paths(out_dir, seed)["gt"])
    paths = method_paths(out_dir, seed, method)
    k = None if method is GuidanceMethod.BASE else grid_to_mask(read_rmg(paths["k"]))
    extract = None if k is None else partial(guidance_mask, method=method, params=params)
    p_lr, k_lr = make_lr_pair(gt, k, s, realistic=realistic_k, params=params, extract=extract)
    write_rmg(p_lr, scene_paths(out_dir, seed)["plr"], force=force)
    if k is not None:
        write_rmg(k_lr, paths["klr"], force=force)


def cmd_sr(out_dir: Path, seed: int, method: GuidanceMethod, s: int, config: SrConfig = SrConfig(),
           force: bool = False) -> SrResult:
    """Reconstruct phat_<method>_<seed> from plr_<seed> and, if guided, klr_<method>_<seed>."""
    method = GuidanceMethod(method)
    p_lr = read_rmg(scene_paths(out_dir, seed)["plr"])
    paths = method_paths(out_dir, seed, method)
    guidance = None if method is GuidanceMethod.BASE else read_rmg(paths["klr"])
    result = reconstruct(p_lr, guidance, s, config)
    write_rmg(result.p_hat.grid, paths["phat"], force=force)
    write_pgm(result.p_hat.grid, paths["phat_pgm"], force=force)
    report_repo.write_csv_repo(
        paths["trace"], ["iteration", "energy"], list(enumerate(result.energy_trace)), force=force
    )
    return result


# ── eval / pipeline ───────────────────────────────────────────────────────────

def cmd_eval(manifest_path: Path, config: RunConfig, force: bool = False) -> ComparisonReport:
    manifest = manifest_repo.read_manifest_repo(Path(manifest_path))
    return run_comparison(
        manifest,
        methods=config.methods,
        s=config.stride_s,
        sr_config=config.sr,
        edge_params=config.edge,
        workers=config.workers,
        out_dir=Path(config.output_dir),
        force=force,
        realistic_k=config.realistic_k,
    )


def cmd_pipeline(config: RunConfig, force: bool = False) -> ComparisonReport:
    """gen → guidance → LR pairs → reconstructions → report.csv / summary.csv."""
    cmd_gen(config, force=force)
    report = cmd_eval(Path(config.output_dir) / MANIFEST_NAME, config, force=force)
    if not report.ok:
        logger.warning(f"Pipeline finished with {len(report.failures)} failed scene/method tasks")
    return report


# ── ddm-demo ──────────────────────────────────────────────────────────────────

HIST_HEIGHT = 64


def histogram_mask(samples: np.ndarray, config: DdmDemoConfig) -> BinaryMask:
    """Bar chart of the samples over mu0 ± 4σ, one column per bin."""
    half_width = 4.0 * float(np.sqrt(config.var0)) if config.var0 > 0 else 1.0
    counts, _ = np.histogram(
        samples, bins=config.hist_bins, range=(config.mu0 - half_width, config.mu0 + half_width)
    )
    peak = max(int(counts.max()), 1)
    heights = np.ceil(counts * HIST_HEIGHT / peak).astype(np.int64)
    rows = np.arange(HIST_HEIGHT)[:, None]
    return BinaryMask.from_array(rows >= HIST_HEIGHT - heights[None, :])


def cmd_ddm_demo(config: RunConfig, force: bool = False) -> DemoResult:
    """
    Run the sampler, score the oracle's training losses with config.loss,
    write ddm_trace.csv and ddm_hist.pgm, then check moments.
    """
    out_dir = Path(config.output_dir)
    result = run_ddm_demo(config.ddm, config.seed)
    losses = demo_losses(config.ddm, config.loss, config.seed)
    result = result._replace(losses=losses)
    report_repo.write_csv_repo(
        out_dir / "ddm_trace.csv",
        ["step", "t", "mean", "var"],
        result.trace,
        comments=[
            f"target_mean={config.ddm.mu0!r}",
            f"target_var={config.ddm.var0!r}",
            f"loss_t={losses.t!r} loss_drift={losses.drift!r} loss_noise={losses.noise!r} "
            f"loss_recon={losses.recon!r} loss_total={losses.total!r}",
        ],
        force=force,
    )
    write_pgm(histogram_mask(result.samples, config.ddm), out_dir / "ddm_hist.pgm", force=force)
    try:
        check_demo_moments(result, config.ddm)
    except MomentCheckFailed:
        logger.warning("ddm demo moments missed the target band")
        raise
    return result

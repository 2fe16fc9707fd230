#!/usr/bin/env python3
# app/services/recon_services.py
"""
Edge-guided variational super-resolution over the amplitude A = √P.

    E(A) = λ_d · mean_lr (A(s·i, s·j) − √P_LR(i, j))²
         + λ_s · mean     w · ((D_x A)² + (D_y A)²)
         + λ_h · mean     (1 − K) · (∇²A + k² A)²

D_x, D_y are forward differences whose last entry is 0 (replicate border),
∇² is the replicate-padded 5-point Laplacian, and w = floor + (1 − floor)(1 − K)
down-weights smoothing across guidance edges. Every term is quadratic in A.
"""

import math
from typing import Optional, Tuple, Union

import numpy as np

from app.core.errors import DimensionMismatch, ValueOutOfRange
from app.core.logging_config import logger
from app.schemas.edge import EdgeParams, GuidanceMethod
from app.schemas.grid import BinaryMask, Grid2D, RadioMap
from app.schemas.recon import GuidanceLift, SrConfig, SrResult, StepRule
from app.schemas.scene import PropagationParams
from app.services.grid_services import amplitude, grid_to_mask, mask_to_grid
from app.services.helm_edge_services import canny, k_edge_map, laplacian5, lbp_edge
from app.services.resample_services import sample_coords, upsample_bilinear

# Smallest step the line search tries before declaring a stall.
_MIN_STEP = 1e-30


# ── Guidance ──────────────────────────────────────────────────────────────────

def guidance_from_method(p: Grid2D, method: GuidanceMethod, params: EdgeParams = EdgeParams()) -> Optional[Grid2D]:
    """
    Guidance mask for one of the four configurations, as a 0/1 grid on p's
    lattice. K-edge works on the amplitude, Canny and LBP on the power map;
    BASE means no guidance.
    """
    method = GuidanceMethod(method)
    if method is GuidanceMethod.BASE:
        return None
    if method is GuidanceMethod.KEDGE:
        mask = k_edge_map(amplitude(p), params)
    elif method is GuidanceMethod.CANNY:
        mask = canny(p, params)
    else:
        mask = lbp_edge(p, params)
    return mask_to_grid(mask, p.spacing_h)


def guidance_mask(p: Grid2D, method: GuidanceMethod, params: EdgeParams = EdgeParams()) -> BinaryMask:
    """guidance_from_method as a BinaryMask; BASE gives an empty mask."""
    k = guidance_from_method(p, method, params)
    if k is None:
        return BinaryMask.from_array(np.zeros(p.shape, dtype=np.uint8))
    return grid_to_mask(k)


def _support(n_lr: int, n_hr: int) -> Tuple[np.ndarray, np.ndarray]:
    """HR cells carrying nonzero bilinear weight for each LR sample (align-corners)."""
    x = sample_coords(n_hr, n_lr)
    lo = np.floor(x).astype(np.int64)
    hi = np.where(x > lo, np.minimum(lo + 1, n_hr - 1), lo)
    return lo, hi


def lift_guidance(
    k: Grid2D,
    shape: Tuple[int, int],
    stride: int,
    rule: GuidanceLift = GuidanceLift.SOURCE,
) -> Grid2D:
    """
    Place LR guidance on the HR lattice; HR guidance passes through.

    SOURCE marks, for every nonzero LR value, the HR cells it was resampled
    from, so the result is 0/1 and an edge seen at LR always lands on the
    cells that contain it. Runs of 4-adjacent nonzero samples are bridged so
    a lifted edge stays connected. BILINEAR is the stride-anchored bilinear
    lift clipped to [0, 1].
    """
    if k.shape == tuple(shape):
        return k
    if GuidanceLift(rule) is GuidanceLift.BILINEAR:
        lifted = upsample_bilinear(k, shape, stride=stride)
        return lifted.with_values(np.clip(lifted.values, 0.0, 1.0))

    on = k.values > 0.0
    r_lo, r_hi = _support(k.height, shape[0])
    c_lo, c_hi = _support(k.width, shape[1])
    lifted = np.zeros(shape)
    for i, j in np.argwhere(on):
        i_end = i + 1 if i + 1 < k.height and on[i + 1, j] else i
        j_end = j + 1 if j + 1 < k.width and on[i, j + 1] else j
        lifted[r_lo[i]:r_hi[i_end] + 1, c_lo[j]:c_hi[j] + 1] = 1.0
        lifted[r_lo[i]:r_hi[i] + 1, c_lo[j]:c_hi[j_end] + 1] = 1.0
    return Grid2D.from_array(lifted, spacing_h=k.spacing_h / stride)


def build_edge_weights(k_hr: Grid2D, floor: float) -> Grid2D:
    """w = floor + (1 − floor)(1 − K): 1 on smooth cells, floor on edges."""
    v = k_hr.values
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueOutOfRange(f"guidance must lie in [0, 1], got [{v.min():.6g}, {v.max():.6g}]")
    if not 0.0 <= floor < 1.0:
        raise ValueOutOfRange(f"edge weight floor must lie in [0, 1), got {floor}")
    return k_hr.with_values(floor + (1.0 - floor) * (1.0 - v))


# ── Energy and gradient ───────────────────────────────────────────────────────

def _stride_of(a: Grid2D, p_lr: Grid2D) -> int:
    s = a.height // p_lr.height
    if s < 1 or a.height != s * p_lr.height or a.width != s * p_lr.width:
        raise DimensionMismatch(
            f"HR grid {a.shape} is not an integer multiple of LR grid {p_lr.shape} with one stride"
        )
    return s


def _check_weights(a: Grid2D, weights: Grid2D) -> None:
    if weights.shape != a.shape:
        raise DimensionMismatch(f"weights {weights.shape} do not match A {a.shape}")


def _helm_mask(weights: Grid2D, config: SrConfig) -> np.ndarray:
    """Recover 1 − K from the weights."""
    floor = config.edge_weight_floor
    return (weights.values - floor) / (1.0 - floor)


def _forward_diffs(v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    dx = np.zeros_like(v)
    dy = np.zeros_like(v)
    dx[:, :-1] = v[:, 1:] - v[:, :-1]
    dy[:-1, :] = v[1:, :] - v[:-1, :]
    return dx, dy


def _laplacian_adjoint(v: np.ndarray, h: float) -> np.ndarray:
    """Lᵀv for the replicate-padded 5-point Laplacian L."""
    out = -4.0 * v
    out[:-1, :] += v[1:, :]
    out[0, :] += v[0, :]
    out[1:, :] += v[:-1, :]
    out[-1, :] += v[-1, :]
    out[:, :-1] += v[:, 1:]
    out[:, 0] += v[:, 0]
    out[:, 1:] += v[:, :-1]
    out[:, -1] += v[:, -1]
    return out / (h * h)


def _terms(a: Grid2D, p_lr: Grid2D, weights: Grid2D, config: SrConfig):
    s = _stride_of(a, p_lr)
    _check_weights(a, weights)
    v = a.values
    n_cells = v.size
    target = np.sqrt(np.maximum(p_lr.values, 0.0))
    data_res = v[::s, ::s] - target
    dx, dy = _forward_diffs(v)
    mask = helm_res = None
    if config.lambda_helm:
        mask = _helm_mask(weights, config)
        helm_res = laplacian5(a).values + config.k_eff ** 2 * v
    return s, n_cells, data_res, dx, dy, mask, helm_res


def sr_energy(a: Grid2D, p_lr: Grid2D, weights: Grid2D, config: SrConfig) -> float:
    _, n_cells, data_res, dx, dy, mask, helm_res = _terms(a, p_lr, weights, config)
    energy = config.lambda_data * float(np.mean(data_res ** 2))
    energy += config.lambda_smooth * float(np.sum(weights.values * (dx ** 2 + dy ** 2))) / n_cells
    if config.lambda_helm:
        energy += config.lambda_helm * float(np.sum(mask * helm_res ** 2)) / n_cells
    return energy


def sr_energy_grad(a: Grid2D, p_lr: Grid2D, weights: Grid2D, config: SrConfig) -> Grid2D:
    s, n_cells, data_res, dx, dy, mask, helm_res = _terms(a, p_lr, weights, config)
    grad = np.zeros(a.shape)

    grad[::s, ::s] += 2.0 * config.lambda_data / data_res.size * data_res

    c = 2.0 * config.lambda_smooth / n_cells
    gx = c * weights.values * dx
    gy = c * weights.values * dy
    grad[:, 1:] += gx[:, :-1]
    grad[:, :-1] -= gx[:, :-1]
    grad[1:, :] += gy[:-1, :]
    grad[:-1, :] -= gy[:-1, :]

    if config.lambda_helm:
        mr = mask * helm_res
        c_h = 2.0 * config.lambda_helm / n_cells
        grad += c_h * (_laplacian_adjoint(mr, a.spacing_h) + config.k_eff ** 2 * mr)

    return a.with_values(grad)


def lipschitz_bound(a: Grid2D, p_lr: Grid2D, weights: Grid2D, config: SrConfig) -> float:
    """Upper bound on the largest Hessian eigenvalue of E."""
    n_cells = a.values.size
    n_lr = p_lr.values.size
    h = a.spacing_h
    bound = 2.0 * config.lambda_data / n_lr
    bound += 16.0 * config.lambda_smooth * float(weights.values.max()) / n_cells
    bound += 2.0 * config.lambda_helm * (8.0 / (h * h) + config.k_eff ** 2) ** 2 / n_cells
    return bound


# ── Solver ────────────────────────────────────────────────────────────────────

def _projected_grad(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Gradient with components blocked by the A >= 0 bound zeroed."""
    return np.where((v <= 0.0) & (g > 0.0), 0.0, g)


def _result_map(p_lr: Union[RadioMap, Grid2D], values: np.ndarray, spacing_h: float) -> RadioMap:
    grid = Grid2D.from_array(np.clip(values, 0.0, 1.0), spacing_h=spacing_h)
    if isinstance(p_lr, RadioMap):
        return RadioMap(grid=grid, tx_pos=p_lr.tx_pos, freq_hz=p_lr.freq_hz, norm_bounds=p_lr.norm_bounds)
    return RadioMap(grid=grid, tx_pos=(0.0, 0.0), freq_hz=PropagationParams().freq_hz, norm_bounds=(0.0, 1.0))


def reconstruct(
    p_lr: Union[RadioMap, Grid2D],
    guidance: Optional[Grid2D],
    s: int,
    config: SrConfig = SrConfig(),
) -> SrResult:
    """
    Minimize E over A >= 0 by projected gradient descent and return P̂ = A².

    The backtracking rule starts each iteration at twice the last accepted
    step (initially 1/L) and halves until the Armijo condition holds with a
    finite trial energy, so energy_trace never increases.
    """
    lr = p_lr.grid if isinstance(p_lr, RadioMap) else p_lr
    if lr.values.min() < 0.0 or lr.values.max() > 1.0:
        raise ValueOutOfRange("P_LR must lie in [0, 1]")
    if s < 1:
        raise ValueOutOfRange(f"stride must be >= 1, got {s}")

    hr_shape = (lr.height * s, lr.width * s)
    spacing_h = lr.spacing_h / s
    if guidance is None:
        k_hr = Grid2D.from_array(np.zeros(hr_shape), spacing_h=spacing_h)
    else:
        if guidance.shape not in (lr.shape, hr_shape):
            raise DimensionMismatch(f"guidance {guidance.shape} fits neither {lr.shape} nor {hr_shape}")
        k_hr = lift_guidance(guidance, hr_shape, s, config.guidance_lift)
    weights = build_edge_weights(k_hr, config.edge_weight_floor)

    a = upsample_bilinear(amplitude(lr).grid, hr_shape, stride=s)
    a = Grid2D.from_array(a.values, spacing_h=spacing_h)
    weights = Grid2D.from_array(weights.values, spacing_h=spacing_h)

    energy = sr_energy(a, lr, weights, config)
    trace = [energy]
    lipschitz = lipschitz_bound(a, lr, weights, config)
    step = config.fixed_step if config.step_rule is StepRule.FIXED else (1.0 / lipschitz if lipschitz > 0 else 1.0)

    converged = False
    iterations = 0
    v = a.values
    while True:
        g = sr_energy_grad(a, lr, weights, config).values
        if float(np.max(np.abs(_projected_grad(v, g)))) < config.grad_tol:
            converged = True
            break
        if iterations >= config.max_iters:
            break

        if config.step_rule is StepRule.FIXED:
            trial = np.maximum(v - step * g, 0.0)
            trial_energy = sr_energy(a.with_values(trial), lr, weights, config)
            if not math.isfinite(trial_energy) or trial_energy > energy:
                logger.warning(f"fixed step {step} increased the energy; stopping at iteration {iterations}")
                break
        else:
            eta = 2.0 * step if iterations else step
            while True:
                trial = np.maximum(v - eta * g, 0.0)
                trial_energy = sr_energy(a.with_values(trial), lr, weights, config)
                decrease = float(np.sum(g * (v - trial)))
                if math.isfinite(trial_energy) and trial_energy <= energy - config.armijo_c * decrease:
                    break
                eta *= 0.5
                if eta < _MIN_STEP:
                    trial = None
                    break
            if trial is None:
                logger.warning(f"line search stalled at iteration {iterations}")
                break
            step = eta

        v = trial
        a = a.with_values(v)
        energy = trial_energy
        trace.append(energy)
        iterations += 1

    result = SrResult(
        p_hat=_result_map(p_lr, v * v, spacing_h),
        iterations=iterations,
        final_energy=energy,
        energy_trace=trace,
        converged=converged,
    )
    logger.info(
        f"Reconstruction {'converged' if converged else 'stopped'} after {iterations} iterations, "
        f"energy {energy:.6g}",
        extra={"extra": {"stride": s, "guided": guidance is not None}},
    )
    return result

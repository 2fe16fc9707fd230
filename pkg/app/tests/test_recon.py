#!/usr/bin/env python3
"""Edge weights, the SR energy and its gradient, and the projected-gradient solver."""

import numpy as np
import pytest

from app.core.errors import DimensionMismatch, ValueOutOfRange
from app.schemas.edge import GuidanceMethod
from app.schemas.grid import Grid2D, RadioMap
from app.schemas.recon import GuidanceLift, SrConfig, StepRule
from app.schemas.scene import SceneConfig
from app.services.eval_services import nmse
from app.services.grid_services import grid_to_mask
from app.services.recon_services import (
    build_edge_weights,
    guidance_from_method,
    lift_guidance,
    reconstruct,
    sr_energy,
    sr_energy_grad,
)
from app.services.resample_services import make_lr_pair
from app.services.scenegen_services import gen_scene, simulate_pathloss


def _energy_oracle(a, p_lr, k, floor, config, s):
    height, width = a.shape
    h = 0.5
    data = np.mean([(a[s * i, s * j] - np.sqrt(p_lr[i, j])) ** 2
                    for i in range(p_lr.shape[0]) for j in range(p_lr.shape[1])])
    smooth = helm = 0.0
    for i in range(height):
        for j in range(width):
            w = floor + (1.0 - floor) * (1.0 - k[i, j])
            dx = a[i, j + 1] - a[i, j] if j < width - 1 else 0.0
            dy = a[i + 1, j] - a[i, j] if i < height - 1 else 0.0
            smooth += w * (dx * dx + dy * dy)
            lap = (a[max(i - 1, 0), j] + a[min(i + 1, height - 1), j] + a[i, max(j - 1, 0)]
                   + a[i, min(j + 1, width - 1)] - 4.0 * a[i, j]) / (h * h)
            helm += (1.0 - k[i, j]) * (lap + config.k_eff ** 2 * a[i, j]) ** 2
    n = a.size
    return config.lambda_data * data + config.lambda_smooth * smooth / n + config.lambda_helm * helm / n


def _problem(rng, hr=8, s=2, floor=0.05):
    a = Grid2D.from_array(rng.uniform(0.1, 1.0, size=(hr, hr)), spacing_h=0.5)
    p_lr = Grid2D.from_array(rng.uniform(0.0, 1.0, size=(hr // s, hr // s)), spacing_h=0.5 * s)
    k = rng.uniform(size=(hr, hr))
    weights = build_edge_weights(Grid2D.from_array(k, spacing_h=0.5), floor)
    return a, p_lr, k, weights


FULL = SrConfig(lambda_data=1.0, lambda_smooth=0.3, lambda_helm=0.2, k_eff=0.7)


# ── edge weights ──

def test_edge_weights_affine_map():
    zeros = Grid2D.from_array(np.zeros((3, 3)))
    assert np.all(build_edge_weights(zeros, 0.05).values == 1.0)
    ones = Grid2D.from_array(np.ones((3, 3)))
    np.testing.assert_allclose(build_edge_weights(ones, 0.05).values, 0.05)
    mixed = Grid2D.from_array([[0.0, 0.5, 1.0]])
    np.testing.assert_allclose(build_edge_weights(mixed, 0.0).values, [[1.0, 0.5, 0.0]])


def test_edge_weights_reject_out_of_range():
    with pytest.raises(ValueOutOfRange):
        build_edge_weights(Grid2D.from_array([[1.2]]), 0.05)
    with pytest.raises(ValueOutOfRange):
        build_edge_weights(Grid2D.from_array([[0.2]]), 1.0)


# ── energy ──

def test_energy_zero_at_consistent_amplitude(rng):
    gt = rng.uniform(size=(8, 8))
    a = Grid2D.from_array(np.sqrt(gt))
    weights = build_edge_weights(Grid2D.from_array(np.zeros((8, 8))), 0.05)
    config = SrConfig(lambda_smooth=0.0)
    assert sr_energy(a, Grid2D.from_array(gt[::4, ::4]), weights, config) == 0.0


def test_energy_of_constant_is_data_misfit(rng):
    _, p_lr, _, weights = _problem(rng)
    a = Grid2D.from_array(np.full((8, 8), 0.4), spacing_h=0.5)
    expected = np.mean((0.4 - np.sqrt(p_lr.values)) ** 2)
    assert sr_energy(a, p_lr, weights, SrConfig(lambda_smooth=5.0)) == pytest.approx(expected, rel=1e-12)


def test_energy_matches_loop_oracle(rng):
    for _ in range(5):
        a, p_lr, k, weights = _problem(rng)
        expected = _energy_oracle(a.values, p_lr.values, k, 0.05, FULL, 2)
        assert sr_energy(a, p_lr, weights, FULL) == pytest.approx(expected, abs=1e-10)


def test_energy_rejects_mismatched_lattices(rng):
    a, _, _, weights = _problem(rng)
    with pytest.raises(DimensionMismatch):
        sr_energy(a, Grid2D.from_array(np.zeros((3, 3))), weights, FULL)
    with pytest.raises(DimensionMismatch):
        sr_energy(a, Grid2D.from_array(np.zeros((4, 4))), Grid2D.from_array(np.ones((4, 4))), FULL)


# ── gradient ──

@pytest.mark.parametrize("lambda_helm", [0.0, 0.1])
def test_gradient_matches_central_differences(rng, lambda_helm):
    config = FULL.model_copy(update={"lambda_helm": lambda_helm})
    step = 1e-6
    for _ in range(10):
        a, p_lr, _, weights = _problem(rng)
        grad = sr_energy_grad(a, p_lr, weights, config).values
        for i in range(8):
            for j in range(8):
                plus = a.values.copy()
                minus = a.values.copy()
                plus[i, j] += step
                minus[i, j] -= step
                fd = (sr_energy(a.with_values(plus), p_lr, weights, config)
                      - sr_energy(a.with_values(minus), p_lr, weights, config)) / (2.0 * step)
                assert abs(fd - grad[i, j]) <= 1e-5 * max(abs(grad[i, j]), 1e-2)


def test_gradient_vanishes_at_dense_minimizer(rng):
    _, p_lr, _, weights = _problem(rng, hr=4, s=2)
    zero = Grid2D.from_array(np.zeros((4, 4)), spacing_h=0.5)
    g0 = sr_energy_grad(zero, p_lr, weights, FULL).values.ravel()
    hessian = np.empty((16, 16))
    for idx in range(16):
        basis = np.zeros(16)
        basis[idx] = 1.0
        column = sr_energy_grad(zero.with_values(basis.reshape(4, 4)), p_lr, weights, FULL).values.ravel()
        hessian[:, idx] = column - g0
    a_star = np.linalg.solve(hessian, -g0)
    grad = sr_energy_grad(zero.with_values(a_star.reshape(4, 4)), p_lr, weights, FULL).values
    assert np.linalg.norm(grad) < 1e-10


def test_gradient_is_zero_without_terms(rng):
    a, p_lr, _, weights = _problem(rng)
    config = SrConfig(lambda_data=0.0, lambda_smooth=0.0, lambda_helm=0.0)
    assert np.all(sr_energy_grad(a, p_lr, weights, config).values == 0.0)


# ── guidance ──

def _scene_map() -> Grid2D:
    scene = gen_scene(9, SceneConfig(grid_n=32, building_count_min=2, building_count_max=4, size_min=4.0, size_max=8.0))
    return simulate_pathloss(scene)[0].grid


def test_guidance_base_and_constant():
    assert guidance_from_method(Grid2D.from_array(np.zeros((4, 4))), GuidanceMethod.BASE) is None
    k = guidance_from_method(Grid2D.from_array(np.full((6, 6), 0.3)), GuidanceMethod.KEDGE)
    assert np.all(k.values == 0.0)


@pytest.mark.parametrize("method", [GuidanceMethod.KEDGE, GuidanceMethod.LBP, GuidanceMethod.CANNY])
def test_guidance_is_deterministic(method):
    first = guidance_from_method(_scene_map(), method)
    second = guidance_from_method(_scene_map(), method)
    assert first.values.tobytes() == second.values.tobytes()
    assert set(np.unique(first.values)) <= {0.0, 1.0}


def test_lift_guidance_passes_hr_through(rng):
    hr = Grid2D.from_array(rng.uniform(size=(8, 8)))
    assert lift_guidance(hr, (8, 8), 2) is hr


def test_source_lift_marks_the_resampled_cells():
    k = np.zeros((4, 4))
    k[1, 2] = 0.3
    k[3, 0] = 1.0
    # 4 -> 16 maps LR index i onto HR cell 5i exactly
    lifted = lift_guidance(Grid2D.from_array(k), (16, 16), 4)
    assert set(np.unique(lifted.values)) == {0.0, 1.0}
    assert np.argwhere(lifted.values).tolist() == [[5, 10], [15, 0]]

    k = np.zeros((4, 4))
    k[1, 2] = 0.2
    # 4 -> 8 maps i onto 7i/3: 0, 2.33, 4.67, 7
    lifted = lift_guidance(Grid2D.from_array(k), (8, 8), 2)
    assert np.argwhere(lifted.values).tolist() == [[2, 4], [2, 5], [3, 4], [3, 5]]


def test_source_lift_keeps_an_edge_connected():
    k = np.zeros((4, 4))
    k[:, 2] = 1.0
    # supports hit rows 0, 2-3, 4-5, 7; bridging fills 1 and 6
    lifted = lift_guidance(Grid2D.from_array(k), (8, 8), 2).values
    assert np.all(lifted[:, 4:6] == 1.0)
    assert lifted.sum() == 16.0


def test_bilinear_lift_is_fractional(rng):
    k = Grid2D.from_array(rng.uniform(size=(4, 4)))
    lifted = lift_guidance(k, (8, 8), 2, GuidanceLift.BILINEAR)
    assert lifted.shape == (8, 8)
    assert 0.0 <= lifted.values.min() and lifted.values.max() <= 1.0
    assert np.any((lifted.values > 0.0) & (lifted.values < 1.0))


# ── reconstruct ──

def test_fully_observed_data_term_is_exact(rng):
    p_lr = Grid2D.from_array(rng.uniform(size=(8, 8)))
    result = reconstruct(p_lr, None, 1, SrConfig(lambda_smooth=0.0))
    np.testing.assert_allclose(result.p_hat.grid.values, p_lr.values, rtol=0, atol=1e-8)
    assert result.converged


@pytest.mark.parametrize("s", [1, 2, 4])
def test_constant_map_stays_constant(s):
    result = reconstruct(Grid2D.from_array(np.full((4, 4), 0.36)), None, s, SrConfig(lambda_helm=0.2))
    assert result.p_hat.grid.shape == (4 * s, 4 * s)
    np.testing.assert_allclose(result.p_hat.grid.values, 0.36, rtol=0, atol=1e-6)


def test_energy_trace_never_increases(rng):
    p_lr = Grid2D.from_array(rng.uniform(size=(6, 6)))
    guidance = Grid2D.from_array((rng.uniform(size=(6, 6)) > 0.7).astype(float))
    result = reconstruct(p_lr, guidance, 3, FULL.model_copy(update={"max_iters": 80}))
    trace = result.energy_trace
    assert len(trace) == result.iterations + 1
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    assert result.final_energy == trace[-1]
    assert np.all(np.isfinite(result.p_hat.grid.values))
    assert 0.0 <= result.p_hat.grid.values.min() and result.p_hat.grid.values.max() <= 1.0


def test_lambda_scaling_leaves_iterates_unchanged(rng):
    p_lr = Grid2D.from_array(rng.uniform(size=(4, 4)))
    config = SrConfig(lambda_smooth=0.5, grad_tol=1e-30, max_iters=25)
    base = reconstruct(p_lr, None, 2, config)
    scaled = reconstruct(p_lr, None, 2, config.scaled(4.0))
    np.testing.assert_array_equal(base.p_hat.grid.values, scaled.p_hat.grid.values)
    np.testing.assert_array_equal(4.0 * np.array(base.energy_trace), scaled.energy_trace)


def test_stronger_data_weight_fits_samples_better(rng):
    p_lr = Grid2D.from_array(rng.uniform(0.2, 0.8, size=(4, 4)))
    misfits = []
    for lam in (0.5, 5.0):
        config = SrConfig(lambda_data=lam, lambda_smooth=1.0, grad_tol=1e-9, max_iters=20000)
        result = reconstruct(p_lr, None, 2, config)
        assert result.converged
        lattice = np.sqrt(result.p_hat.grid.values[::2, ::2])
        misfits.append(float(np.mean((lattice - np.sqrt(p_lr.values)) ** 2)))
    assert misfits[1] < misfits[0]


def test_fixed_step_stops_when_energy_rises(rng):
    p_lr = Grid2D.from_array(rng.uniform(size=(4, 4)))
    config = SrConfig(step_rule=StepRule.FIXED, fixed_step=1e6)
    result = reconstruct(p_lr, None, 2, config)
    assert not result.converged
    assert result.energy_trace == [result.final_energy]


def test_radio_map_metadata_is_kept(rng):
    grid = Grid2D.from_array(rng.uniform(size=(4, 4)), spacing_h=4.0)
    p_lr = RadioMap(grid=grid, tx_pos=(3.0, 5.0), freq_hz=2.4e9, norm_bounds=(-140.0, 10.0))
    result = reconstruct(p_lr, None, 4, SrConfig(max_iters=5))
    assert result.p_hat.tx_pos == (3.0, 5.0)
    assert result.p_hat.norm_bounds == (-140.0, 10.0)
    assert result.p_hat.grid.spacing_h == 1.0


def test_reconstruct_rejects_bad_inputs():
    with pytest.raises(ValueOutOfRange):
        reconstruct(Grid2D.from_array([[0.5, 1.5]]), None, 2)
    with pytest.raises(DimensionMismatch):
        reconstruct(Grid2D.from_array(np.zeros((4, 4))), Grid2D.from_array(np.zeros((5, 5))), 2)


def _wall_map(n=32, col=14, level=0.64):
    """Free space of constant power left of col, a building from col on."""
    values = np.zeros((n, n))
    values[:, :col] = level
    return Grid2D.from_array(values)


def test_kedge_guidance_sharpens_a_wall():
    gt = _wall_map()
    k = grid_to_mask(guidance_from_method(gt, GuidanceMethod.KEDGE))
    assert np.all(k.bits[:, 14] == 1) and k.bits.sum() == 32

    p_lr, k_lr = make_lr_pair(gt, k, 4)
    config = SrConfig(max_iters=3000)
    guided = reconstruct(p_lr, k_lr, 4, config).p_hat.grid.values
    plain = reconstruct(p_lr, None, 4, config).p_hat.grid.values
    truth = gt.values / 0.64

    assert nmse(guided, truth) < nmse(plain, truth)
    # the free cell next to the wall keeps more of its power
    assert guided[:, 13].mean() > plain[:, 13].mean()
    # building cells away from the lattice drop further
    assert guided[:, 15].mean() < plain[:, 15].mean()


def test_unguided_reconstruction_ignores_the_lift_rule(rng):
    p_lr = Grid2D.from_array(rng.uniform(size=(6, 6)))
    config = SrConfig(max_iters=40)
    source = reconstruct(p_lr, None, 2, config)
    bilinear = reconstruct(p_lr, None, 2, config.model_copy(update={"guidance_lift": GuidanceLift.BILINEAR}))
    np.testing.assert_array_equal(source.p_hat.grid.values, bilinear.p_hat.grid.values)

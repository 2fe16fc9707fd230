#!/usr/bin/env python3
# app/services/diffusion_services.py
"""
Diffusion mathematics checked against closed-form Gaussian oracles.

Only the demo runners draw random numbers; every other stochastic operation
takes its standard-normal noise from the caller, so chains are reproducible
and the tests can feed exact values.
"""

import math
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from app.core.errors import (
    BadTimeStep,
    DegenerateAlphaBar,
    DimensionMismatch,
    MomentCheckFailed,
    TimeOutOfRange,
    ValueOutOfRange,
)
from app.core.logging_config import logger
from app.schemas.diffusion import DdmDemoConfig, DenoiserOutput, DiffusionState, LossWeights, Schedule

ArrayLike = Union[float, np.ndarray]
DriftFn = Union[ArrayLike, Callable[[np.ndarray, float], ArrayLike]]
DiffusionFn = Union[float, Callable[[float], float]]
ScoreFn = Union[ArrayLike, Callable[[np.ndarray, float], ArrayLike]]
Denoiser = Callable[[np.ndarray, float], DenoiserOutput]
NoiseFn = Callable[[Tuple[int, ...]], np.ndarray]

_CONSTANT_DRIFT = Schedule.constant_drift_ddm()


def _same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if np.shape(a) != np.shape(b):
        raise DimensionMismatch(f"{what}: shapes {np.shape(a)} and {np.shape(b)} differ")


# ── DDPM ──────────────────────────────────────────────────────────────────────

def ddpm_forward_step(x_prev: np.ndarray, step: int, schedule: Schedule, noise: np.ndarray) -> np.ndarray:
    """x_t = α_t · x_{t−1} + √β_t · noise, with 0-based step index."""
    schedule.check_step(step)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    _same_shape(x_prev, noise, "ddpm_forward_step")
    return schedule.alphas[step] * x_prev + math.sqrt(schedule.betas[step]) * np.asarray(noise)


def ddpm_forward_marginal(x0: np.ndarray, step: int, schedule: Schedule, noise: np.ndarray) -> np.ndarray:
    """Jump straight to step: √ᾱ_t · x0 + √(1 − ᾱ_t) · noise."""
    schedule.check_step(step)
    x0 = np.asarray(x0, dtype=np.float64)
    _same_shape(x0, noise, "ddpm_forward_marginal")
    abar = schedule.alpha_bars[step]
    return math.sqrt(abar) * x0 + math.sqrt(1.0 - abar) * np.asarray(noise)


def score_from_eps(eps_hat: np.ndarray, abar_t: float) -> np.ndarray:
    if not 0.0 < abar_t < 1.0:
        raise DegenerateAlphaBar(f"score undefined at alpha_bar = {abar_t}; need 0 < alpha_bar < 1")
    return -np.asarray(eps_hat, dtype=np.float64) / math.sqrt(1.0 - abar_t)


# ── Constant-drift decoupled diffusion ────────────────────────────────────────

def ddm_forward_sample(x0: np.ndarray, t: float, noise: np.ndarray) -> np.ndarray:
    """x_t = (1 − t) · x0 + √t · noise."""
    _CONSTANT_DRIFT.check_time(t)
    x0 = np.asarray(x0, dtype=np.float64)
    _same_shape(x0, noise, "ddm_forward_sample")
    return _CONSTANT_DRIFT.gamma(t) * x0 + math.sqrt(_CONSTANT_DRIFT.delta_sq(t)) * np.asarray(noise)


def ddm_reverse_step(
    x_t: np.ndarray,
    t: float,
    dt: float,
    denoiser_out: DenoiserOutput,
    noise: np.ndarray,
) -> np.ndarray:
    """
    One reverse step t → t − dt with a constant predicted drift:

        mean = x_t − dt · f̂ − (dt / √t) · ε̂
        std  = √(dt · (t − dt) / t)

    The final step (dt == t) injects no noise.
    """
    if not (0.0 < dt <= t <= 1.0):
        raise BadTimeStep(f"reverse step needs 0 < dt <= t <= 1, got t = {t}, dt = {dt}")
    x_t = np.asarray(x_t, dtype=np.float64)
    _same_shape(x_t, denoiser_out.f_hat, "ddm_reverse_step")
    _same_shape(x_t, noise, "ddm_reverse_step")

    mean = x_t - dt * denoiser_out.f_hat - (dt / math.sqrt(t)) * denoiser_out.eps_hat
    if dt == t:
        return mean
    return mean + math.sqrt(dt * (t - dt) / t) * np.asarray(noise)


def gaussian_oracle_denoiser(
    x_t: np.ndarray,
    t: float,
    mu0: float,
    var0: float,
    posterior_noise: Optional[np.ndarray] = None,
) -> DenoiserOutput:
    """
    Exact denoiser for x0 ~ N(mu0, var0) per coordinate.

    Without posterior_noise x̂0 is the posterior mean E[x0 | x_t]. With it,
    x̂0 is a posterior draw mean + √Var(x0 | x_t) · noise, which makes every
    reverse step sample p(x_{t−dt} | x_t) exactly.
    """
    if not 0.0 < t <= 1.0:
        raise TimeOutOfRange(f"oracle needs t in (0, 1], got {t}")
    if var0 < 0.0:
        raise ValueOutOfRange(f"var0 must be >= 0, got {var0}")
    x_t = np.asarray(x_t, dtype=np.float64)
    gamma = 1.0 - t
    denom = gamma * gamma * var0 + t
    x0_hat = mu0 + gamma * var0 * (x_t - gamma * mu0) / denom
    if posterior_noise is not None:
        _same_shape(x_t, posterior_noise, "gaussian_oracle_denoiser")
        x0_hat = x0_hat + math.sqrt(var0 * t / denom) * np.asarray(posterior_noise)
    eps_hat = (x_t - gamma * x0_hat) / math.sqrt(t)
    return DenoiserOutput(f_hat=-x0_hat, eps_hat=eps_hat)


def ddm_sample_chain(
    x1: np.ndarray,
    steps: int,
    denoise: Denoiser,
    noise_fn: NoiseFn,
    on_step: Optional[Callable[[int, DiffusionState], None]] = None,
) -> np.ndarray:
    """
    Reverse chain from t = 1 to t = 0 on the uniform grid t_k = k / steps.

    ``noise_fn(shape)`` supplies standard-normal draws (a Generator's
    ``standard_normal`` fits). ``on_step(k, state)`` sees the state at t_k
    after each step, ending with k = 0.
    """
    if steps < 1:
        raise BadTimeStep(f"chain needs at least one step, got {steps}")
    x = np.asarray(x1, dtype=np.float64)
    for k in range(steps, 0, -1):
        t = k / steps
        dt = t - (k - 1) / steps
        out = denoise(x, t)
        x = ddm_reverse_step(x, t, dt, out, noise_fn(x.shape))
        if on_step is not None:
            on_step(k - 1, DiffusionState(x=x, t=(k - 1) / steps))
    return x


# ── Continuous-time SDE / ODE integrators ─────────────────────────────────────

def _eval_drift(f: DriftFn, x: np.ndarray, t: float) -> ArrayLike:
    return f(x, t) if callable(f) else f


def _eval_diffusion(g: DiffusionFn, t: float) -> float:
    return g(t) if callable(g) else g


def reverse_sde_step(
    x: np.ndarray,
    t: float,
    dt: float,
    drift_f: DriftFn,
    diffusion_g: DiffusionFn,
    score: ScoreFn,
    noise: np.ndarray,
) -> np.ndarray:
    """Euler–Maruyama, time decreasing: x' = x − [f − g² · score] dt + g √dt · noise."""
    if dt <= 0.0:
        raise BadTimeStep(f"dt must be > 0, got {dt}")
    x = np.asarray(x, dtype=np.float64)
    f = _eval_drift(drift_f, x, t)
    g = _eval_diffusion(diffusion_g, t)
    s = _eval_drift(score, x, t)
    return x - (f - g * g * s) * dt + g * math.sqrt(dt) * np.asarray(noise)


def pf_ode_step(
    x: np.ndarray,
    t: float,
    dt: float,
    drift_f: DriftFn,
    diffusion_g: DiffusionFn,
    score: ScoreFn,
) -> np.ndarray:
    """Explicit Euler on the probability-flow ODE: x' = x − [f − ½ g² · score] dt."""
    if dt <= 0.0:
        raise BadTimeStep(f"dt must be > 0, got {dt}")
    x = np.asarray(x, dtype=np.float64)
    f = _eval_drift(drift_f, x, t)
    g = _eval_diffusion(diffusion_g, t)
    s = _eval_drift(score, x, t)
    return x - (f - 0.5 * g * g * s) * dt


# ── Losses ────────────────────────────────────────────────────────────────────

def _mse(a, b, what: str) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    _same_shape(a, b, what)
    if a.size == 0:
        return 0.0
    return float(np.mean((a - b) ** 2))


def loss_drift(f_hat: np.ndarray, x0: np.ndarray) -> float:
    """Mean of (f̂ + x0)²: the constant drift target is −x0."""
    return _mse(f_hat, -np.asarray(x0, dtype=np.float64), "loss_drift")


def loss_noise(eps_hat: np.ndarray, eps: np.ndarray) -> float:
    return _mse(eps_hat, eps, "loss_noise")


def loss_recon(z0_hat: np.ndarray, z0: np.ndarray) -> float:
    return _mse(z0_hat, z0, "loss_recon")


def loss_total(ld: float, ln: float, lr: float, weights: LossWeights = LossWeights()) -> float:
    if min(ld, ln, lr) < 0.0:
        raise ValueOutOfRange(f"losses must be nonnegative, got ({ld}, {ln}, {lr})")
    return weights.lambda1 * ld + weights.lambda2 * ln + weights.lambda3 * lr


def vae_loss(recon_sq_err: float, mu: np.ndarray, logvar: np.ndarray) -> float:
    """Reconstruction error plus the closed-form KL(N(mu, e^logvar) ‖ N(0, 1))."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.asarray(logvar, dtype=np.float64)
    _same_shape(mu, logvar, "vae_loss")
    if not np.all(np.isfinite(logvar)):
        raise ValueOutOfRange("logvar must be finite")
    kl = 0.5 * float(np.sum(mu * mu + np.exp(logvar) - 1.0 - logvar))
    return float(recon_sq_err) + kl


# ── Gaussian-oracle demo ──────────────────────────────────────────────────────

class DemoTraceRow(NamedTuple):
    step: int
    t: float
    mean: float
    var: float


class DemoLosses(NamedTuple):
    t: float
    drift: float
    noise: float
    recon: float
    total: float


class DemoResult(NamedTuple):
    samples: np.ndarray
    trace: List[DemoTraceRow]
    mean_se: float
    var_se: float
    losses: Optional[DemoLosses] = None

    @property
    def final(self) -> DemoTraceRow:
        return self.trace[-1]


def run_ddm_demo(config: DdmDemoConfig, seed: int) -> DemoResult:
    """
    Sample ``config.samples`` scalars through the reverse chain with the
    posterior-sampling Gaussian oracle, recording sample moments per step.
    """
    rng = np.random.default_rng(seed)
    n = config.samples
    trace: List[DemoTraceRow] = []

    def denoise(x: np.ndarray, t: float) -> DenoiserOutput:
        return gaussian_oracle_denoiser(x, t, config.mu0, config.var0, posterior_noise=rng.standard_normal(x.shape))

    def record(k: int, state: DiffusionState) -> None:
        trace.append(DemoTraceRow(k, state.t, float(np.mean(state.x)), float(np.var(state.x, ddof=1))))

    x1 = rng.standard_normal(n)
    record(config.steps, DiffusionState(x=x1, t=1.0))
    samples = ddm_sample_chain(x1, config.steps, denoise, rng.standard_normal, on_step=record)

    result = DemoResult(
        samples=samples,
        trace=trace,
        mean_se=math.sqrt(config.var0 / n),
        var_se=config.var0 * math.sqrt(2.0 / (n - 1)),
    )
    logger.info(
        f"ddm demo: {n} samples over {config.steps} steps, mean {result.final.mean:.4f}, "
        f"var {result.final.var:.4f}",
        extra={"extra": {"seed": seed, "mu0": config.mu0, "var0": config.var0}},
    )
    return result


def demo_losses(config: DdmDemoConfig, weights: LossWeights, seed: int) -> DemoLosses:
    """
    Training losses of the posterior-mean oracle at t = config.loss_t on
    fresh draws x0 ~ N(mu0, var0). The oracle is Bayes-optimal, so these are
    the irreducible values: drift and recon equal the posterior variance
    var0·t / ((1 − t)²·var0 + t), the noise loss is that times (1 − t)² / t.
    """
    rng = np.random.default_rng(seed)
    t = config.loss_t
    x0 = config.mu0 + math.sqrt(config.var0) * rng.standard_normal(config.samples)
    eps = rng.standard_normal(config.samples)
    out = gaussian_oracle_denoiser(ddm_forward_sample(x0, t, eps), t, config.mu0, config.var0)

    ld = loss_drift(out.f_hat, x0)
    ln = loss_noise(out.eps_hat, eps)
    lr = loss_recon(-out.f_hat, x0)
    losses = DemoLosses(t, ld, ln, lr, loss_total(ld, ln, lr, weights))
    logger.info(
        f"ddm demo losses at t={t}: total {losses.total:.5g}",
        extra={"extra": {"drift": ld, "noise": ln, "recon": lr, "weights": weights.model_dump()}},
    )
    return losses


def check_demo_moments(result: DemoResult, config: DdmDemoConfig) -> None:
    """Raise MomentCheckFailed unless the final mean and variance sit within tolerance_se SEs."""
    final = result.final
    tol = config.tolerance_se
    if config.var0 == 0.0:
        # Degenerate target: the chain is deterministic and must land on mu0.
        mean_bad = not math.isclose(final.mean, config.mu0, rel_tol=0.0, abs_tol=1e-9)
        var_bad = final.var > 1e-18
    else:
        mean_bad = abs(final.mean - config.mu0) > tol * result.mean_se
        var_bad = abs(final.var - config.var0) > tol * result.var_se
    if mean_bad or var_bad:
        raise MomentCheckFailed(
            f"sampled mean {final.mean:.5f} / var {final.var:.5f} outside {tol} SE of "
            f"target ({config.mu0}, {config.var0})"
        )

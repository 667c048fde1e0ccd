"""DDPM machinery: variance schedules, forward noising, and ancestral sampling
with classifier-free guidance and masked (known-region) conditioning.

The denoiser is any callable ``f(x_t, t, cond) -> x0_hat`` predicting the clean
matrix; ``cond=None`` selects the unconditional branch. Masked sampling keeps
the known entries pinned to the reference at the matching noise level on every
step and copies the reference bits exactly after the last step, which is what
extension, partial-body editing and blending are built on.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import SamplingDivergedError

BETA_MIN = 1e-4
BETA_MAX = 0.999


@dataclasses.dataclass(frozen=True)
class NoiseSchedule:
    """Step count T with per-step betas and cumulative alpha products (1-indexed by t)."""

    steps: int
    betas: np.ndarray      # (T,), betas[t-1] is beta_t
    alphas: np.ndarray     # (T,), 1 - beta
    alpha_bar: np.ndarray  # (T,), prod of alphas up to t

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        alphas = np.asarray(self.alphas, dtype=np.float64)
        alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        if not (betas.shape == alphas.shape == alpha_bar.shape == (self.steps,)):
            raise ValueError("schedule arrays must all have length T")
        if not ((betas > 0.0) & (betas < 1.0)).all():
            raise ValueError("betas must lie in (0, 1)")
        if not (np.diff(alpha_bar) < 0.0).all():
            raise ValueError("alpha_bar must be strictly decreasing")
        if alpha_bar[0] <= 0.99:
            raise ValueError(f"alpha_bar[1] = {alpha_bar[0]:.6f} must exceed 0.99")
        if alpha_bar[-1] >= 0.01:
            raise ValueError(f"alpha_bar[T] = {alpha_bar[-1]:.6f} must be below 0.01")
        for name, arr in (("betas", betas), ("alphas", alphas), ("alpha_bar", alpha_bar)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def abar(self, t: int) -> float:
        """alpha_bar at step t, with abar(0) = 1 by convention."""
        if t == 0:
            return 1.0
        return float(self.alpha_bar[t - 1])


def cosine_schedule(steps: int) -> NoiseSchedule:
    """Cosine alpha_bar curve normalized to 1 at t=0, betas clipped to [1e-4, 0.999]."""
    if steps < 2:
        raise ValueError("schedule needs at least 2 steps")
    t = np.arange(steps + 1, dtype=np.float64)
    f = np.cos(((t / steps) + 0.008) / 1.008 * math.pi / 2.0) ** 2
    abar_raw = f / f[0]
    betas = 1.0 - abar_raw[1:] / abar_raw[:-1]
    betas = np.clip(betas, BETA_MIN, BETA_MAX)
    alphas = 1.0 - betas
    alpha_bar = np.cumprod(alphas)
    return NoiseSchedule(steps=steps, betas=betas, alphas=alphas, alpha_bar=alpha_bar)


def q_sample(x0: np.ndarray, t: int, noise: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Forward noising: x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * noise."""
    x0 = np.asarray(x0, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if x0.shape != noise.shape:
        raise ValueError(f"noise shape {noise.shape} does not match x0 shape {x0.shape}")
    if not 1 <= t <= sched.steps:
        raise ValueError(f"step t={t} outside [1, {sched.steps}]")
    abar = sched.abar(t)
    return math.sqrt(abar) * x0 + math.sqrt(1.0 - abar) * noise


@dataclasses.dataclass(frozen=True)
class SamplerConfig:
    """Sampling knobs: guidance strength, RNG seed, and the step count to run."""

    seed: int
    guidance_scale: float = 2.5
    steps: int = 100

    def __post_init__(self):
        if self.guidance_scale < 0.0:
            raise ValueError("guidance_scale must be nonnegative")


@dataclasses.dataclass(frozen=True)
class ObservationMask:
    """Known-region constraint: boolean matrix + reference values for the known entries."""

    known: np.ndarray      # (F, D) bool, True = held to the reference
    reference: np.ndarray  # (F, D) values used where known

    def __post_init__(self):
        known = np.asarray(self.known, dtype=bool).copy()
        reference = np.asarray(self.reference, dtype=np.float64).copy()
        if known.shape != reference.shape:
            raise ValueError("known and reference must have the same shape")
        if not np.isfinite(reference[known]).all():
            raise ValueError("reference must be finite on known entries")
        known.flags.writeable = False
        reference.flags.writeable = False
        object.__setattr__(self, "known", known)
        object.__setattr__(self, "reference", reference)


def p_sample_loop(
    denoiser,
    cond,
    shape,
    mask: ObservationMask | None,
    cfg: SamplerConfig,
    sched: NoiseSchedule,
) -> np.ndarray:
    """Ancestral DDPM sampling from pure noise, deterministic for a fixed seed.

    The guided prediction is ``x0_u + s * (x0_c - x0_u)``; with ``cond=None``
    (or s=0) the output is bit-identical to an unconditional run on the same
    seed. When a mask is present the known entries are re-pinned to
    ``q_sample(reference, level)`` at every intermediate level and to the
    reference bits exactly at the end.
    """
    if cfg.steps != sched.steps:
        raise ValueError(f"config steps {cfg.steps} != schedule steps {sched.steps}")
    if mask is not None and mask.known.shape != tuple(shape):
        raise ValueError(f"mask shape {mask.known.shape} does not match output shape {tuple(shape)}")

    rng = np.random.default_rng(cfg.seed)
    x = rng.standard_normal(shape)
    if mask is not None:
        noised_ref = q_sample(mask.reference, sched.steps, rng.standard_normal(shape), sched)
        x[mask.known] = noised_ref[mask.known]

    for t in range(sched.steps, 0, -1):
        x0_u = np.asarray(denoiser(x, t, None), dtype=np.float64)
        if cond is None:
            x0_hat = x0_u
        else:
            x0_c = np.asarray(denoiser(x, t, cond), dtype=np.float64)
            x0_hat = x0_u + cfg.guidance_scale * (x0_c - x0_u)
        if not np.isfinite(x0_hat).all():
            finite_max = float(np.nanmax(np.abs(np.where(np.isfinite(x0_hat), x0_hat, 0.0))))
            raise SamplingDivergedError(step=t, max_abs=finite_max)

        abar_t = sched.abar(t)
        abar_prev = sched.abar(t - 1)
        beta_t = float(sched.betas[t - 1])
        alpha_t = float(sched.alphas[t - 1])
        coef_x0 = math.sqrt(abar_prev) * beta_t / (1.0 - abar_t)
        coef_xt = math.sqrt(alpha_t) * (1.0 - abar_prev) / (1.0 - abar_t)
        mean = coef_x0 * x0_hat + coef_xt * x
        if t > 1:
            var = (1.0 - abar_prev) / (1.0 - abar_t) * beta_t
            x = mean + math.sqrt(var) * rng.standard_normal(shape)
        else:
            x = mean

        if mask is not None:
            level = t - 1
            if level >= 1:
                noised_ref = q_sample(mask.reference, level, rng.standard_normal(shape), sched)
                x[mask.known] = noised_ref[mask.known]
            else:
                x[mask.known] = mask.reference[mask.known]

    return x

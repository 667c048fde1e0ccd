"""Denoiser training: x0-prediction MSE at uniformly sampled diffusion steps
with condition dropout, optimized by plain gradient descent with momentum.

The gradient is assembled by hand from the network's backward pass (including
the scatter into the text-embedding table) and is checked against central
finite differences in the tests. Two-stage recipe: pretrain on the full corpus
with the embedding trainable, then fine-tune on the styled subset with the
embedding table frozen.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .corpus import grammar_tokens
from .diffusion import NoiseSchedule, q_sample
from .errors import TrainingDivergedError
from .network import NetConfig, denoiser_backward, denoiser_forward, init_params
from .text import TextEncoder

MOMENTUM = 0.9
DIVERGENCE_LOSS = 1e3


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-5
    batch_size: int = 16
    epochs: int = 50
    condition_dropout: float = 0.1
    seed: int = 0
    t_samples: int = 1  # diffusion steps averaged per item per optimization step

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("learning_rate, batch_size and epochs must be positive")
        if not 0.0 <= self.condition_dropout < 1.0:
            raise ValueError("condition_dropout must lie in [0, 1)")
        if self.t_samples < 1:
            raise ValueError("t_samples must be >= 1")


@dataclasses.dataclass
class TrainResult:
    params: dict
    history: list
    encoder: TextEncoder


def prepare_batch(items: list, encoder: TextEncoder) -> list:
    """(token indices, clean frames) pairs the loss functions consume."""
    return [(encoder.token_indices(item.label_text), item.motion.frames) for item in items]


def _batch_pass(params, net_cfg, batch, sched, seed, cond_dropout, want_grads,
                predict=None, t_samples=1):
    rng = np.random.default_rng(seed)
    total_loss = 0.0
    grads = {k: np.zeros_like(v) for k, v in params.items()} if want_grads else None
    n_items = len(batch)
    if n_items == 0:
        raise ValueError("batch must be nonempty")
    n_terms = n_items * t_samples
    seg = sched.steps / t_samples

    for token_idx, x0 in batch:
        for s in range(t_samples):
            if t_samples == 1:
                t = int(rng.integers(1, sched.steps + 1))
            else:
                # stratified draw: uniform marginal, far lower step-to-step variance
                lo = 1 + int(math.floor(s * seg))
                hi = min(sched.steps, int(math.floor((s + 1) * seg)))
                t = int(rng.integers(lo, hi + 1))
            noise = rng.standard_normal(x0.shape)
            dropped = rng.random() < cond_dropout
            cond = None if dropped else params["embed"][token_idx].mean(axis=0)
            x_t = q_sample(x0, t, noise, sched)

            if predict is not None:
                pred = np.asarray(predict(x_t, t, cond), dtype=np.float64)
                cache = None
            else:
                pred, cache = denoiser_forward(params, net_cfg, x_t, t, cond, want_cache=True)
            if not np.isfinite(pred).all():
                raise TrainingDivergedError(step=t, loss=float("inf"), history=[])
            err = pred - x0
            total_loss += float(np.mean(err * err))

            if want_grads:
                dout = (2.0 / err.size / n_terms) * err
                item_grads, d_cond = denoiser_backward(params, net_cfg, cache, dout)
                for k, g in item_grads.items():
                    grads[k] += g
                if not dropped:
                    np.add.at(grads["embed"], token_idx, d_cond / len(token_idx))

    loss = total_loss / n_terms
    return (loss, grads) if want_grads else loss


def training_loss(params, net_cfg, batch, sched, seed, cond_dropout=0.1, predict=None,
                  t_samples=1):
    """Scalar MSE between predicted and clean frames at seeded random steps.

    `predict` overrides the network (probe configurations in tests); the seed
    fully determines the sampled steps, noise and dropout decisions, so the
    loss is a deterministic function of the parameters.
    """
    return _batch_pass(params, net_cfg, batch, sched, seed, cond_dropout, want_grads=False,
                       predict=predict, t_samples=t_samples)


def loss_gradient(params, net_cfg, batch, sched, seed, cond_dropout=0.1, t_samples=1):
    """(loss, gradient dict) with the same seeded randomness as training_loss."""
    return _batch_pass(params, net_cfg, batch, sched, seed, cond_dropout, want_grads=True,
                       t_samples=t_samples)


def train(
    corpus: list,
    config: TrainConfig,
    sched: NoiseSchedule,
    net_cfg: NetConfig | None = None,
    *,
    encoder: TextEncoder | None = None,
    start_params: dict | None = None,
    freeze_embedding: bool = False,
) -> TrainResult:
    """Minibatch gradient descent with momentum 0.9; deterministic per seed.

    Aborts with the loss history attached if the loss passes the divergence
    threshold. The returned encoder shares the trained embedding table.
    """
    if not corpus:
        raise ValueError("corpus must be nonempty")
    if net_cfg is None:
        net_cfg = NetConfig()
    rng = np.random.default_rng(config.seed)
    if encoder is None:
        vocab = grammar_tokens()
        table = rng.standard_normal((len(vocab) + 1, net_cfg.cond_dim)) * 0.5
        encoder = TextEncoder(vocabulary=vocab, embedding_table=table)
    if start_params is None:
        params = init_params(net_cfg, encoder.embedding_table.shape[0], rng)
        params["embed"] = encoder.embedding_table.copy()
    else:
        params = {k: v.copy() for k, v in start_params.items()}

    items = prepare_batch(corpus, encoder)
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    history: list[float] = []

    for _ in range(config.epochs):
        order = rng.permutation(len(items))
        for lo in range(0, len(order), config.batch_size):
            chunk = [items[i] for i in order[lo:lo + config.batch_size]]
            step_seed = int(rng.integers(0, 2**63))
            try:
                loss, grads = loss_gradient(params, net_cfg, chunk, sched, step_seed,
                                            cond_dropout=config.condition_dropout,
                                            t_samples=config.t_samples)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(step=len(history) + 1, loss=exc.loss,
                                            history=history) from exc
            history.append(loss)
            if loss > DIVERGENCE_LOSS:
                raise TrainingDivergedError(step=len(history), loss=loss, history=history)
            if freeze_embedding:
                grads["embed"][:] = 0.0
            for k in sorted(params):
                velocity[k] = MOMENTUM * velocity[k] - config.learning_rate * grads[k]
                params[k] = params[k] + velocity[k]

    return TrainResult(params=params, history=history,
                       encoder=encoder.with_table(params["embed"]))


def train_two_stage(
    corpus: list,
    pretrain_cfg: TrainConfig,
    finetune_cfg: TrainConfig,
    sched: NoiseSchedule,
    net_cfg: NetConfig | None = None,
) -> tuple[TrainResult, TrainResult]:
    """Pretrain on everything, then fine-tune on the styled subset with the
    text embedding frozen (mirrors a freeze-the-encoder fine-tuning recipe)."""
    stage1 = train(corpus, pretrain_cfg, sched, net_cfg)
    styled = [item for item in corpus if item.style_tag is not None]
    if not styled:
        raise ValueError("corpus has no styled items to fine-tune on")
    stage2 = train(styled, finetune_cfg, sched, net_cfg, encoder=stage1.encoder,
                   start_params=stage1.params, freeze_embedding=True)
    return stage1, stage2


def smoothed(history, window: int = 10):
    """Moving average used to judge the training curve."""
    arr = np.asarray(history, dtype=np.float64)
    if arr.size < window:
        return arr.copy()
    kernel = np.ones(window) / window
    return np.convolve(arr, kernel, mode="valid")

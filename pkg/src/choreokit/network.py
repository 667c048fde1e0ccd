"""The small conditional denoiser: a per-frame residual network with temporal
mixing by 1D convolution, written directly in numpy with a hand-derived
backward pass (the gradient is checked against central finite differences).

Inputs are (F, D) feature matrices; the diffusion step and the frame index
both enter through sinusoidal embeddings, the text condition through a learned
projection of the (possibly trained) embedding-table mean. The network
predicts the clean matrix x0, not the noise.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

SILU_CLIP = 60.0  # sigmoid saturates far before this; keeps exp() overflow-free


@dataclasses.dataclass(frozen=True)
class NetConfig:
    feat_dim: int = 135
    hidden: int = 128
    blocks: int = 4
    cond_dim: int = 64
    time_dim: int = 32
    pos_dim: int = 32
    kernel: int = 5

    def __post_init__(self):
        if self.time_dim % 2 or self.pos_dim % 2:
            raise ValueError("embedding dims must be even")
        if self.kernel % 2 != 1:
            raise ValueError("kernel must be odd (same-padding conv)")


def sinusoidal_embedding(pos, dim: int) -> np.ndarray:
    """Transformer-style sin/cos features of a scalar or (N,) array of positions."""
    pos = np.asarray(pos, dtype=np.float64)
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half, dtype=np.float64) / half)
    args = pos[..., None] * freqs
    return np.concatenate([np.sin(args), np.cos(args)], axis=-1)


def init_params(cfg: NetConfig, vocab_rows: int, rng: np.random.Generator) -> dict:
    """Fresh parameter dict; `vocab_rows` includes the reserved OOV row."""
    def dense(fan_in, shape):
        return rng.standard_normal(shape) / math.sqrt(fan_in)

    params = {
        "embed": rng.standard_normal((vocab_rows, cfg.cond_dim)) * 0.5,
        "w_in": dense(cfg.feat_dim, (cfg.feat_dim, cfg.hidden)),
        "b_in": np.zeros(cfg.hidden),
        "w_time": dense(cfg.time_dim, (cfg.time_dim, cfg.hidden)),
        "w_pos": dense(cfg.pos_dim, (cfg.pos_dim, cfg.hidden)),
        "w_cond": dense(cfg.cond_dim, (cfg.cond_dim, cfg.hidden)),
        # zero-init output: training starts from the zero predictor and descends smoothly
        "w_out": np.zeros((cfg.hidden, cfg.feat_dim)),
        "b_out": np.zeros(cfg.feat_dim),
    }
    for k in range(cfg.blocks):
        params[f"conv{k}_w"] = dense(cfg.kernel * cfg.hidden, (cfg.kernel, cfg.hidden, cfg.hidden))
        params[f"conv{k}_b"] = np.zeros(cfg.hidden)
    return params


def _silu(u):
    sig = 1.0 / (1.0 + np.exp(-np.clip(u, -SILU_CLIP, SILU_CLIP)))
    return u * sig, sig


def _conv_same(h, w):
    # h: (F, H_in), w: (kernel, H_in, H_out); zero padding keeps F fixed
    n, taps = h.shape[0], w.shape[0]
    half = taps // 2
    pad = np.zeros((n + taps - 1, h.shape[1]))
    pad[half:half + n] = h
    out = pad[0:n] @ w[0]
    for k in range(1, taps):
        out += pad[k:k + n] @ w[k]
    return out


def denoiser_forward(params: dict, cfg: NetConfig, x, t: int, cond, want_cache: bool = False):
    """Predict x0 from (x_t, t, cond); cond is an (E,) vector or None (unconditional)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    temb = sinusoidal_embedding(float(t), cfg.time_dim)
    pemb = sinusoidal_embedding(np.arange(n, dtype=np.float64), cfg.pos_dim)
    cvec = np.zeros(cfg.cond_dim) if cond is None else np.asarray(cond, dtype=np.float64)

    h = x @ params["w_in"] + params["b_in"]
    h = h + temb @ params["w_time"] + pemb @ params["w_pos"] + cvec @ params["w_cond"]

    block_cache = []
    for k in range(cfg.blocks):
        u = _conv_same(h, params[f"conv{k}_w"]) + params[f"conv{k}_b"]
        act, sig = _silu(u)
        if want_cache:
            block_cache.append((h, u, sig))
        h = h + act

    out = h @ params["w_out"] + params["b_out"]
    if not want_cache:
        return out
    cache = {"x": x, "temb": temb, "pemb": pemb, "cvec": cvec, "blocks": block_cache, "h_last": h}
    return out, cache


def denoiser_backward(params: dict, cfg: NetConfig, cache: dict, dout) -> tuple[dict, np.ndarray]:
    """Gradients of a scalar loss wrt every network tensor and wrt the cond vector.

    `dout` is d loss / d prediction, shape (F, D). Returns (grads, d_cond);
    grads covers the network tensors (not "embed" -- the embedding gradient is
    scattered by the loss, which owns the token lookup).
    """
    grads = {}
    h_last = cache["h_last"]
    grads["w_out"] = h_last.T @ dout
    grads["b_out"] = dout.sum(axis=0)
    dh = dout @ params["w_out"].T

    taps = cfg.kernel
    half = taps // 2
    for k in range(cfg.blocks - 1, -1, -1):
        h_in, u, sig = cache["blocks"][k]
        du = dh * (sig * (1.0 + u * (1.0 - sig)))
        grads[f"conv{k}_b"] = du.sum(axis=0)
        n = h_in.shape[0]
        pad = np.zeros((n + taps - 1, h_in.shape[1]))
        pad[half:half + n] = h_in
        w = params[f"conv{k}_w"]
        dw = np.empty_like(w)
        dpad = np.zeros_like(pad)
        for tap in range(taps):
            dw[tap] = pad[tap:tap + n].T @ du
            dpad[tap:tap + n] += du @ w[tap].T
        grads[f"conv{k}_w"] = dw
        dh = dh + dpad[half:half + n]

    grads["w_in"] = cache["x"].T @ dh
    grads["b_in"] = dh.sum(axis=0)
    dh_sum = dh.sum(axis=0)
    grads["w_time"] = np.outer(cache["temb"], dh_sum)
    grads["w_pos"] = cache["pemb"].T @ dh
    grads["w_cond"] = np.outer(cache["cvec"], dh_sum)
    d_cond = params["w_cond"] @ dh_sum
    return grads, d_cond


def make_denoiser(params: dict, cfg: NetConfig):
    """Close over parameters as the `f(x_t, t, cond)` callable the sampler wants."""
    def denoise(x_t, t, cond):
        return denoiser_forward(params, cfg, x_t, t, cond)
    return denoise


def zero_grads_like(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def flatten_params(params: dict):
    """Stable (name-sorted) iteration used by the optimizer and checkpoint code."""
    return [(k, params[k]) for k in sorted(params)]

"""The user-facing editing operations: variant generation, extension, style
transfer, partial-body editing, and blending.

All generation paths go through masked DDPM sampling; the masking is what
guarantees the preservation contracts (extension keeps its prefix bit-exact,
blending keeps both inputs, partial-body edits keep every non-edited joint).
Functions here take an explicit denoiser callable + schedule so they work with
trained and untrained networks alike.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .corpus import STYLE_NAMES, build_style_references
from .diffusion import NoiseSchedule, ObservationMask, SamplerConfig, p_sample_loop
from .motion import (
    FEATURE_DIM,
    FPS,
    MAX_FRAMES,
    MotionSequence,
    Skeleton,
    body_part_mask,
    low_pass_frames,
    normalize_rotation_blocks,
)

GENERATE_MIN_S = 0.5
GENERATE_MAX_S = 10.0   # prompt-generation cap ("up to 10 seconds")
EXTEND_MAX_S = 5.0      # per-call extension cap
EXTEND_CONTEXT_FRAMES = 100  # original frames fed to the sampler alongside the new ones
BLEND_KNOWN_FRAMES = 40      # 2-second prefix/suffix held from each input
BLEND_FILL_FRAMES = 100      # 5-second connecting segment
DEFAULT_STYLE_STRIDE = 4


# ---------------------------------------------------------------------------
# Commands and the style library
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class ExtendCommand:
    seconds: float
    prompt: str | None = None

    kind = "extend"


@dataclasses.dataclass(frozen=True)
class StyleCommand:
    name: str

    kind = "style"


@dataclasses.dataclass(frozen=True)
class PartialBodyCommand:
    part: str
    prompt: str

    kind = "partial_body"


@dataclasses.dataclass(frozen=True)
class BlendCommand:
    other_sequence_id: str

    kind = "blend"


EditCommand = ExtendCommand | StyleCommand | PartialBodyCommand | BlendCommand


@dataclasses.dataclass(frozen=True)
class StyleLibrary:
    """Reference motion per style; low frequencies of these drive style transfer."""

    references: dict

    def __post_init__(self):
        if set(self.references) != set(STYLE_NAMES):
            raise ValueError(f"style library must contain exactly {STYLE_NAMES}")

    @classmethod
    def default(cls) -> "StyleLibrary":
        return cls(references=build_style_references())


# ---------------------------------------------------------------------------
# Generation and editing
# ---------------------------------------------------------------------------

def generate_variants(denoiser, cond, duration_s: float, n: int, seed: int,
                      sched: NoiseSchedule, guidance_scale: float = 2.5) -> list:
    """`n` independent samples on consecutive seeds, each round(duration * fps) frames."""
    if not GENERATE_MIN_S <= duration_s <= GENERATE_MAX_S:
        raise ValueError(
            f"duration cap exceeded: duration_s must lie in [{GENERATE_MIN_S}, {GENERATE_MAX_S}]"
        )
    frames = int(round(duration_s * FPS))
    out = []
    for i in range(n):
        cfg = SamplerConfig(seed=seed + i, guidance_scale=guidance_scale, steps=sched.steps)
        raw = p_sample_loop(denoiser, cond, (frames, FEATURE_DIM), None, cfg, sched)
        out.append(MotionSequence.from_raw(raw))
    return out


def extend(denoiser, seq: MotionSequence, seconds: float, cond, seed: int,
           sched: NoiseSchedule, guidance_scale: float = 2.5) -> MotionSequence:
    """Masked continuation: the input is preserved bit-for-bit, new frames are
    sampled in a window of the last `EXTEND_CONTEXT_FRAMES` original frames."""
    if not 0.0 < seconds <= EXTEND_MAX_S:
        raise ValueError(f"extension seconds out of range (0, {EXTEND_MAX_S}]")
    new = int(round(seconds * FPS))
    total = seq.frame_count + new
    if total > MAX_FRAMES:
        raise ValueError(f"sequence cap exceeded: {total} frames > {MAX_FRAMES}")
    ctx = min(seq.frame_count, EXTEND_CONTEXT_FRAMES)
    window = ctx + new
    known = np.zeros((window, FEATURE_DIM), dtype=bool)
    known[:ctx] = True
    reference = np.zeros((window, FEATURE_DIM))
    reference[:ctx] = seq.frames[seq.frame_count - ctx:]
    mask = ObservationMask(known=known, reference=reference)
    cfg = SamplerConfig(seed=seed, guidance_scale=guidance_scale, steps=sched.steps)
    sampled = p_sample_loop(denoiser, cond, (window, FEATURE_DIM), mask, cfg, sched)
    sampled[ctx:] = normalize_rotation_blocks(sampled[ctx:])
    out = np.concatenate([seq.frames[: seq.frame_count - ctx], sampled], axis=0)
    return MotionSequence(out, fps=seq.fps)


def tile_frames(frames: np.ndarray, n: int) -> np.ndarray:
    """Cyclic tiling/trimming to `n` frames; identity when lengths already match."""
    if frames.shape[0] == n:
        return frames
    idx = np.arange(n) % frames.shape[0]
    return frames[idx]


def style_mix_raw(x_frames: np.ndarray, y_frames: np.ndarray,
                  stride: int = DEFAULT_STYLE_STRIDE) -> np.ndarray:
    """High frequencies of x + low frequencies of y: x - phi(x) + phi(y).

    Computed as x + (phi(y) - phi(x)) so that y == x cancels exactly. The
    result is raw (rotation blocks generally off-manifold); `style_transfer`
    renormalizes it.
    """
    y_frames = tile_frames(np.asarray(y_frames, dtype=np.float64), x_frames.shape[0])
    return x_frames + (low_pass_frames(y_frames, stride) - low_pass_frames(x_frames, stride))


def style_transfer(seq: MotionSequence, style_name: str, lib: StyleLibrary,
                   stride: int = DEFAULT_STYLE_STRIDE) -> MotionSequence:
    """Impose a style reference's low-frequency content on `seq`."""
    if style_name not in lib.references:
        raise ValueError(
            f"unknown style {style_name!r}; valid styles: {', '.join(STYLE_NAMES)}"
        )
    raw = style_mix_raw(seq.frames, lib.references[style_name].frames, stride)
    return MotionSequence.from_raw(raw, fps=seq.fps)


def partial_body_edit(denoiser, skeleton: Skeleton, seq: MotionSequence, part: str,
                      cond, seed: int, sched: NoiseSchedule,
                      guidance_scale: float = 2.5) -> MotionSequence:
    """Regenerate one body part under a prompt; everything else is frozen."""
    part_mask = body_part_mask(skeleton, part)  # raises on unknown part
    known = np.broadcast_to(part_mask.feature_mask, (seq.frame_count, FEATURE_DIM)).copy()
    mask = ObservationMask(known=known, reference=seq.frames)
    cfg = SamplerConfig(seed=seed, guidance_scale=guidance_scale, steps=sched.steps)
    sampled = p_sample_loop(denoiser, cond, (seq.frame_count, FEATURE_DIM), mask, cfg, sched)
    sampled = normalize_rotation_blocks(sampled, joints=part_mask.joint_indices)
    return MotionSequence(sampled, fps=seq.fps)


def blend(denoiser, seq_a: MotionSequence, seq_b: MotionSequence, seed: int,
          sched: NoiseSchedule, guidance_scale: float = 2.5) -> MotionSequence:
    """Join two sequences with a generated 5-second connecting segment.

    The sampler sees a window of [2 s of A's tail | 5 s free | 2 s of B's head]
    with the outer parts held as known; the output keeps A and B bit-for-bit.
    """
    if seq_a.frame_count < BLEND_KNOWN_FRAMES or seq_b.frame_count < BLEND_KNOWN_FRAMES:
        raise ValueError("sequence too short to blend (each input needs >= 2 s)")
    if seq_a.fps != seq_b.fps:
        raise ValueError("cannot blend sequences with different fps")
    total = seq_a.frame_count + BLEND_FILL_FRAMES + seq_b.frame_count
    if total > MAX_FRAMES:
        raise ValueError(f"sequence cap exceeded: {total} frames > {MAX_FRAMES}")
    window = 2 * BLEND_KNOWN_FRAMES + BLEND_FILL_FRAMES
    known = np.zeros((window, FEATURE_DIM), dtype=bool)
    known[:BLEND_KNOWN_FRAMES] = True
    known[BLEND_KNOWN_FRAMES + BLEND_FILL_FRAMES:] = True
    reference = np.zeros((window, FEATURE_DIM))
    reference[:BLEND_KNOWN_FRAMES] = seq_a.frames[-BLEND_KNOWN_FRAMES:]
    reference[BLEND_KNOWN_FRAMES + BLEND_FILL_FRAMES:] = seq_b.frames[:BLEND_KNOWN_FRAMES]
    mask = ObservationMask(known=known, reference=reference)
    cfg = SamplerConfig(seed=seed, guidance_scale=guidance_scale, steps=sched.steps)
    sampled = p_sample_loop(denoiser, None, (window, FEATURE_DIM), mask, cfg, sched)
    middle = normalize_rotation_blocks(
        sampled[BLEND_KNOWN_FRAMES: BLEND_KNOWN_FRAMES + BLEND_FILL_FRAMES]
    )
    out = np.concatenate([seq_a.frames, middle, seq_b.frames], axis=0)
    return MotionSequence(out, fps=seq_a.fps)

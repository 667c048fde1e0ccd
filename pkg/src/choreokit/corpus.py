"""Procedural synthetic dance corpus.

Each movement family is a closed-form function of time with randomized phase,
amplitude and tempo; style names map to modulations layered on top (scaled
amplitude/tempo plus head, spine and root adjustments). Every family has one
defining statistic that holds for all of its items by construction, e.g. a
left-arm wave always moves the left-arm joints more than the right-arm ones.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .motion import (
    FEATURE_DIM,
    FPS,
    JOINT_COUNT,
    MotionSequence,
    axis_angle_to_matrix,
    rotmat_to_6d,
)

FAMILY_NAMES = (
    "wave left arm",
    "wave right arm",
    "side step",
    "torso bounce",
    "spin in place",
    "kick left leg",
    "kick right leg",
)

STYLE_NAMES = ("angry", "childlike", "depressed", "happy", "proud", "strutting")

X = np.array([1.0, 0.0, 0.0])
Y = np.array([0.0, 1.0, 0.0])
Z = np.array([0.0, 0.0, 1.0])


def grammar_tokens() -> tuple:
    """Ordered token list of the label template grammar (families + styles)."""
    tokens = set()
    for name in FAMILY_NAMES + STYLE_NAMES:
        tokens.update(name.split())
    return tuple(sorted(tokens))


@dataclasses.dataclass(frozen=True)
class StyleMod:
    amp: float = 1.0
    tempo: float = 1.0
    head_pitch: float = 0.0   # constant x-rotation of the head joint
    spine_pitch: float = 0.0  # constant x-rotation of the chest joint
    bounce_amp: float = 0.0   # extra root-y oscillation
    bounce_freq: float = 1.8
    sway_amp: float = 0.0     # extra root-x oscillation
    sway_freq: float = 0.9


STYLE_MODS = {
    "angry": StyleMod(amp=1.5, tempo=1.4, head_pitch=-0.15, spine_pitch=-0.05),
    "childlike": StyleMod(amp=1.2, tempo=1.6, bounce_amp=0.02, bounce_freq=2.2),
    "depressed": StyleMod(amp=0.5, tempo=0.75, head_pitch=-0.5, spine_pitch=-0.15),
    "happy": StyleMod(amp=1.4, tempo=1.3, head_pitch=0.1, bounce_amp=0.03),
    "proud": StyleMod(amp=1.1, tempo=1.0, head_pitch=0.2, spine_pitch=0.12),
    "strutting": StyleMod(amp=1.15, tempo=1.1, head_pitch=0.1, sway_amp=0.03),
}


@dataclasses.dataclass(frozen=True)
class CorpusItem:
    label_text: str
    motion: MotionSequence
    style_tag: str | None = None


@dataclasses.dataclass(frozen=True)
class CorpusSpec:
    """Grammar + sizes: which families, how many items each, optional styled variants."""

    families: tuple = FAMILY_NAMES
    items_per_family: int = 4
    duration_s: float = 3.0
    styles: tuple = ()
    styled_items_per_family: int = 1

    def __post_init__(self):
        if self.items_per_family < 1:
            raise ValueError("items_per_family must be >= 1")
        for fam in self.families:
            if fam not in FAMILY_NAMES:
                raise ValueError(f"unknown family {fam!r}; valid: {', '.join(FAMILY_NAMES)}")
        for style in self.styles:
            if style not in STYLE_NAMES:
                raise ValueError(f"unknown style {style!r}; valid: {', '.join(STYLE_NAMES)}")


def _family_tracks(family: str, rng: np.random.Generator, ts: np.ndarray, amp: float):
    """Root track and per-joint (axis, angle-track) lists on tempo-scaled time `ts`."""
    n = ts.shape[0]
    root = np.zeros((n, 3))
    joints: dict[int, list] = {}

    def add(joint, axis, theta):
        joints.setdefault(joint, []).append((axis, theta))

    phase = rng.uniform(0.0, 2.0 * math.pi)
    if family in ("wave left arm", "wave right arm"):
        a = amp * rng.uniform(0.5, 0.9)
        f = rng.uniform(0.8, 1.4)
        w = 2.0 * math.pi * f
        side = 1.0 if family == "wave left arm" else -1.0
        collar, shoulder, elbow, wrist = (13, 16, 18, 20) if side > 0 else (14, 17, 19, 21)
        add(shoulder, Z, side * a * np.sin(w * ts + phase))
        add(elbow, Z, side * 0.5 * a * np.sin(w * ts + phase + 0.8))
        add(collar, Z, side * 0.15 * a * np.sin(w * ts + phase))
        add(wrist, Z, side * 0.3 * a * np.sin(w * ts + phase + 1.2))
    elif family == "side step":
        a = amp * rng.uniform(0.15, 0.3)
        f = rng.uniform(0.5, 0.9)
        w = 2.0 * math.pi * f
        root[:, 0] = a * np.sin(w * ts + phase)
        add(1, Z, 0.12 * amp * np.sin(w * ts + phase))
        add(2, Z, 0.12 * amp * np.sin(w * ts + phase))
        add(4, X, 0.1 * amp * np.sin(w * ts + phase + math.pi / 2))
        add(5, X, -0.1 * amp * np.sin(w * ts + phase + math.pi / 2))
    elif family == "torso bounce":
        a = amp * rng.uniform(0.04, 0.08)
        f = rng.uniform(1.2, 2.0)
        w = 2.0 * math.pi * f
        root[:, 1] = a * np.sin(w * ts + phase)
        for lag, joint in zip((0.0, 0.35, 0.7), (3, 6, 9)):
            add(joint, X, 0.08 * amp * np.sin(w * ts + phase + lag))
    elif family == "spin in place":
        rate = rng.uniform(0.9, 1.3)  # turns per (scaled) second
        direction = 1.0 if rng.random() < 0.5 else -1.0
        add(0, Y, direction * 2.0 * math.pi * rate * amp * ts + phase)
    elif family in ("kick left leg", "kick right leg"):
        a = amp * rng.uniform(0.6, 1.0)
        f = rng.uniform(0.7, 1.1)
        w = 2.0 * math.pi * f
        hip, knee = (1, 4) if family == "kick left leg" else (2, 5)
        lift = 0.5 * (1.0 - np.cos(w * ts + phase))
        add(hip, X, -a * lift)
        add(knee, X, 0.6 * a * 0.5 * (1.0 - np.cos(w * ts + phase + 0.6)))
    else:
        raise ValueError(f"unknown family {family!r}; valid: {', '.join(FAMILY_NAMES)}")
    return root, joints


def _assemble_frames(root: np.ndarray, joints: dict) -> np.ndarray:
    n = root.shape[0]
    frames = np.zeros((n, FEATURE_DIM))
    frames[:, :3] = root
    identity6 = rotmat_to_6d(np.eye(3))
    frames[:, 3:] = np.tile(identity6, JOINT_COUNT)
    for j, tracks in joints.items():
        rot = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        for axis, theta in tracks:
            rot = rot @ axis_angle_to_matrix(axis, np.asarray(theta, dtype=np.float64))
        frames[:, 3 + 6 * j: 9 + 6 * j] = rotmat_to_6d(rot)
    return frames


def synthesize_item(
    family: str,
    rng: np.random.Generator,
    duration_s: float,
    style: str | None = None,
) -> MotionSequence:
    """One closed-form clip of `family`, optionally modulated by `style`."""
    mod = STYLE_MODS[style] if style is not None else StyleMod()
    n = int(round(duration_s * FPS))
    t = np.arange(n, dtype=np.float64) / FPS
    root, joints = _family_tracks(family, rng, mod.tempo * t, mod.amp)

    def add(joint, axis, theta):
        joints.setdefault(joint, []).append((axis, theta))

    if mod.head_pitch:
        add(15, X, np.full(n, mod.head_pitch))
    if mod.spine_pitch:
        add(9, X, np.full(n, mod.spine_pitch))
    if mod.bounce_amp:
        root[:, 1] += mod.bounce_amp * np.sin(2.0 * math.pi * mod.bounce_freq * t)
    if mod.sway_amp:
        root[:, 0] += mod.sway_amp * np.sin(2.0 * math.pi * mod.sway_freq * t)

    return MotionSequence(_assemble_frames(root, joints))


def generate_corpus(spec: CorpusSpec, seed: int) -> list[CorpusItem]:
    """Deterministic corpus: base items per family, then styled variants."""
    rng = np.random.default_rng(seed)
    items = []
    for family in spec.families:
        for _ in range(spec.items_per_family):
            items.append(CorpusItem(
                label_text=family,
                motion=synthesize_item(family, rng, spec.duration_s),
            ))
    for family in spec.families:
        for style in spec.styles:
            for _ in range(spec.styled_items_per_family):
                items.append(CorpusItem(
                    label_text=f"{style} {family}",
                    motion=synthesize_item(family, rng, spec.duration_s, style=style),
                    style_tag=style,
                ))
    return items


def build_style_references(duration_s: float = 10.0, seed: int = 101) -> dict:
    """One reference clip per style: a fixed groove carrying the style's modulation."""
    refs = {}
    for i, style in enumerate(STYLE_NAMES):
        rng = np.random.default_rng(seed + i)
        refs[style] = synthesize_item("torso bounce", rng, duration_s, style=style)
    return refs

"""Skeletal motion data model.

A motion sequence is an F x 135 float matrix at a fixed 20 fps: 3 channels of
root world translation (meters) followed by 22 joints x 6 channels of rotation
in the 6D representation (first two columns of the rotation matrix, column
major). All editing math operates on this matrix; forward kinematics turns a
row back into world joint positions.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import MotionFormatError

FPS = 20
JOINT_COUNT = 22
FEATURE_DIM = 3 + JOINT_COUNT * 6  # 135
MAX_FRAMES = 1200  # engine-wide hard cap (60 s at 20 fps)
ORTHO_TOL = 1e-6

PART_NAMES = ("upper_body", "lower_body", "left_arm", "right_arm", "left_leg", "right_leg")

MOTION_JSON_VERSION = 1


# ---------------------------------------------------------------------------
# Rotation math
# ---------------------------------------------------------------------------

def gram_schmidt_6d(blocks: np.ndarray) -> np.ndarray:
    """Recover rotation matrices from 6D blocks, shape (..., 6) -> (..., 3, 3).

    Degenerate inputs (zero first column, parallel columns) are nudged by
    re-orthogonalizing against fixed fallback axes so the map is total.
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    c1 = blocks[..., 0:3]
    c2 = blocks[..., 3:6]
    eps = 1e-8

    n1 = np.linalg.norm(c1, axis=-1, keepdims=True)
    fallback1 = np.zeros_like(c1)
    fallback1[..., 0] = 1.0
    c1 = np.where(n1 < eps, fallback1, c1)
    n1 = np.linalg.norm(c1, axis=-1, keepdims=True)
    b1 = c1 / n1

    r = c2 - np.sum(b1 * c2, axis=-1, keepdims=True) * b1
    nr = np.linalg.norm(r, axis=-1, keepdims=True)
    # fallback: z axis orthogonalized against b1; if b1 is (anti)parallel to z, use y
    fz = np.zeros_like(c1)
    fz[..., 2] = 1.0
    fy = np.zeros_like(c1)
    fy[..., 1] = 1.0
    alt = fz - np.sum(b1 * fz, axis=-1, keepdims=True) * b1
    nalt = np.linalg.norm(alt, axis=-1, keepdims=True)
    alt2 = fy - np.sum(b1 * fy, axis=-1, keepdims=True) * b1
    alt = np.where(nalt < eps, alt2, alt)
    r = np.where(nr < eps, alt, r)
    b2 = r / np.linalg.norm(r, axis=-1, keepdims=True)

    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def rotmat_to_6d(rot: np.ndarray) -> np.ndarray:
    """First two columns of rotation matrices, shape (..., 3, 3) -> (..., 6)."""
    rot = np.asarray(rot, dtype=np.float64)
    return np.concatenate([rot[..., :, 0], rot[..., :, 1]], axis=-1)


def axis_angle_to_matrix(axis, angle: float | np.ndarray) -> np.ndarray:
    """Rodrigues formula; `axis` is a 3-vector, `angle` scalar or (...,) array."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    angle = np.asarray(angle, dtype=np.float64)
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    s = np.sin(angle)[..., None, None]
    c = np.cos(angle)[..., None, None]
    eye = np.eye(3)
    return eye + s * k + (1.0 - c) * (k @ k)


def matrix_to_quaternion(rot: np.ndarray) -> np.ndarray:
    """Rotation matrices (..., 3, 3) -> unit quaternions (..., 4) in xyzw order."""
    rot = np.asarray(rot, dtype=np.float64)
    m00, m01, m02 = rot[..., 0, 0], rot[..., 0, 1], rot[..., 0, 2]
    m10, m11, m12 = rot[..., 1, 0], rot[..., 1, 1], rot[..., 1, 2]
    m20, m21, m22 = rot[..., 2, 0], rot[..., 2, 1], rot[..., 2, 2]
    # Shepperd's method: pick the largest of (w, x, y, z) pivots per element
    tr = m00 + m11 + m22
    q = np.empty(rot.shape[:-2] + (4,), dtype=np.float64)

    w2 = 1.0 + tr
    x2 = 1.0 + m00 - m11 - m22
    y2 = 1.0 - m00 + m11 - m22
    z2 = 1.0 - m00 - m11 + m22
    pivots = np.stack([x2, y2, z2, w2], axis=-1)
    best = np.argmax(pivots, axis=-1)

    def safe_sqrt(v):
        return np.sqrt(np.maximum(v, 0.0))

    sw = safe_sqrt(w2) * 2.0
    sx = safe_sqrt(x2) * 2.0
    sy = safe_sqrt(y2) * 2.0
    sz = safe_sqrt(z2) * 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        qw = np.stack([(m21 - m12) / sw, (m02 - m20) / sw, (m10 - m01) / sw, sw / 4.0], axis=-1)
        qx = np.stack([sx / 4.0, (m01 + m10) / sx, (m02 + m20) / sx, (m21 - m12) / sx], axis=-1)
        qy = np.stack([(m01 + m10) / sy, sy / 4.0, (m12 + m21) / sy, (m02 - m20) / sy], axis=-1)
        qz = np.stack([(m02 + m20) / sz, (m12 + m21) / sz, sz / 4.0, (m10 - m01) / sz], axis=-1)
    stacked = np.stack([qx, qy, qz, qw], axis=-2)  # (..., 4 candidates, 4)
    q = np.take_along_axis(stacked, best[..., None, None].repeat(4, axis=-1), axis=-2)[..., 0, :]
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    return q


def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    """Unit quaternions (..., 4) xyzw -> rotation matrices (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    x, y, z, w = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - z * w)
    m[..., 0, 2] = 2 * (x * z + y * w)
    m[..., 1, 0] = 2 * (x * y + z * w)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - x * w)
    m[..., 2, 0] = 2 * (x * z - y * w)
    m[..., 2, 1] = 2 * (y * z + x * w)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def frames_to_blocks(frames: np.ndarray) -> np.ndarray:
    """View the rotation channels of (F, 135) frames as (F, 22, 6) blocks."""
    return frames[..., 3:].reshape(frames.shape[:-1] + (JOINT_COUNT, 6))


def normalize_rotation_blocks(frames: np.ndarray, joints=None) -> np.ndarray:
    """Return a copy of `frames` with the 6D blocks of `joints` (default: all)
    replaced by their Gram-Schmidt projection. Untouched channels keep their bits."""
    frames = np.asarray(frames, dtype=np.float64)
    out = frames.copy()
    blocks = frames_to_blocks(out)
    idx = np.arange(JOINT_COUNT) if joints is None else np.asarray(sorted(joints), dtype=int)
    rot = gram_schmidt_6d(blocks[:, idx, :])
    blocks[:, idx, :] = rotmat_to_6d(rot)
    return out


def max_orthonormality_defect(frames: np.ndarray) -> float:
    """Largest |block - gram_schmidt(block)| over all 6D blocks."""
    blocks = frames_to_blocks(np.asarray(frames, dtype=np.float64))
    proj = rotmat_to_6d(gram_schmidt_6d(blocks))
    return float(np.max(np.abs(blocks - proj))) if blocks.size else 0.0


# ---------------------------------------------------------------------------
# Skeleton
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Skeleton:
    """Fixed 22-joint hierarchy with rest offsets and named body-part groups."""

    joint_names: tuple
    parents: tuple
    rest_offsets: np.ndarray  # (22, 3) meters
    body_parts: dict  # part name -> frozenset of joint indices

    def __post_init__(self):
        if len(self.joint_names) != JOINT_COUNT or len(self.parents) != JOINT_COUNT:
            raise ValueError(f"skeleton must have exactly {JOINT_COUNT} joints")
        if self.parents[0] != -1:
            raise ValueError("joint 0 must be the root (parent -1)")
        for j, p in enumerate(self.parents[1:], start=1):
            if not 0 <= p < j:
                raise ValueError(f"parent of joint {j} must precede it (got {p})")
        offsets = np.asarray(self.rest_offsets, dtype=np.float64)
        if offsets.shape != (JOINT_COUNT, 3) or not np.isfinite(offsets).all():
            raise ValueError("rest_offsets must be a finite (22, 3) array")
        offsets = offsets.copy()
        offsets.flags.writeable = False
        object.__setattr__(self, "rest_offsets", offsets)
        if set(self.body_parts) != set(PART_NAMES):
            raise ValueError(f"body_parts must contain exactly {PART_NAMES}")
        parts = {k: frozenset(v) for k, v in self.body_parts.items()}
        all_joints = set(range(JOINT_COUNT))
        if parts["upper_body"] | parts["lower_body"] != all_joints:
            raise ValueError("upper_body and lower_body must cover all joints")
        if not parts["left_arm"] <= parts["upper_body"] or not parts["right_arm"] <= parts["upper_body"]:
            raise ValueError("arms must lie within upper_body")
        if not parts["left_leg"] <= parts["lower_body"] or not parts["right_leg"] <= parts["lower_body"]:
            raise ValueError("legs must lie within lower_body")
        object.__setattr__(self, "body_parts", parts)

    def children(self, joint: int):
        return [j for j, p in enumerate(self.parents) if p == joint]


_JOINT_NAMES = (
    "pelvis",
    "left_hip", "right_hip", "spine1",
    "left_knee", "right_knee", "spine2",
    "left_ankle", "right_ankle", "spine3",
    "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head",
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
)

_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19)

_REST_OFFSETS = np.array([
    [0.00, 0.00, 0.00],     # pelvis (root translation carries world position)
    [0.09, -0.07, 0.00],    # left_hip
    [-0.09, -0.07, 0.00],   # right_hip
    [0.00, 0.11, 0.00],     # spine1
    [0.00, -0.38, 0.00],    # left_knee
    [0.00, -0.38, 0.00],    # right_knee
    [0.00, 0.13, 0.00],     # spine2
    [0.00, -0.40, 0.00],    # left_ankle
    [0.00, -0.40, 0.00],    # right_ankle
    [0.00, 0.13, 0.00],     # spine3
    [0.00, -0.06, 0.13],    # left_foot
    [-0.00, -0.06, 0.13],   # right_foot
    [0.00, 0.09, 0.00],     # neck
    [0.07, 0.04, 0.00],     # left_collar
    [-0.07, 0.04, 0.00],    # right_collar
    [0.00, 0.12, 0.00],     # head
    [0.10, 0.00, 0.00],     # left_shoulder
    [-0.10, 0.00, 0.00],    # right_shoulder
    [0.26, 0.00, 0.00],     # left_elbow
    [-0.26, 0.00, 0.00],    # right_elbow
    [0.25, 0.00, 0.00],     # left_wrist
    [-0.25, 0.00, 0.00],    # right_wrist
])

_BODY_PARTS = {
    "left_arm": frozenset({13, 16, 18, 20}),
    "right_arm": frozenset({14, 17, 19, 21}),
    "left_leg": frozenset({1, 4, 7, 10}),
    "right_leg": frozenset({2, 5, 8, 11}),
    "upper_body": frozenset({3, 6, 9, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21}),
    "lower_body": frozenset({0, 1, 2, 4, 5, 7, 8, 10, 11}),
}


def build_default_skeleton() -> Skeleton:
    """The canonical 22-joint skeleton all engine sequences refer to."""
    return Skeleton(
        joint_names=_JOINT_NAMES,
        parents=_PARENTS,
        rest_offsets=_REST_OFFSETS,
        body_parts=dict(_BODY_PARTS),
    )


# ---------------------------------------------------------------------------
# MotionSequence
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class MotionSequence:
    """Immutable F x 135 feature matrix at a fixed frame rate."""

    frames: np.ndarray
    fps: int = FPS

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)  # defensive copy, bit-exact
        if frames.ndim != 2 or frames.shape[1] != FEATURE_DIM:
            raise ValueError(f"frames must be (F, {FEATURE_DIM}), got {frames.shape}")
        if not 1 <= frames.shape[0] <= MAX_FRAMES:
            raise ValueError(f"frame count {frames.shape[0]} outside [1, {MAX_FRAMES}]")
        if not np.isfinite(frames).all():
            raise ValueError("frames contain non-finite values")
        defect = max_orthonormality_defect(frames)
        if defect > ORTHO_TOL:
            raise ValueError(
                f"6D rotation blocks deviate from orthonormal by {defect:.2e} (> {ORTHO_TOL})"
            )
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def duration_s(self) -> float:
        return self.frame_count / self.fps

    @classmethod
    def from_raw(cls, frames: np.ndarray, fps: int = FPS) -> "MotionSequence":
        """Build from raw (e.g. diffusion) output: every 6D block is renormalized."""
        return cls(normalize_rotation_blocks(frames), fps=fps)

    def root_translation(self) -> np.ndarray:
        return self.frames[:, :3]


# ---------------------------------------------------------------------------
# Body-part masking
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class BodyPartMask:
    """Feature mask for a partial-body edit: True = frozen/known, False = free."""

    part: str
    joint_indices: frozenset
    feature_mask: np.ndarray  # (135,) bool

    def __post_init__(self):
        mask = np.asarray(self.feature_mask, dtype=bool).copy()
        if mask.shape != (FEATURE_DIM,):
            raise ValueError(f"feature_mask must have length {FEATURE_DIM}")
        mask.flags.writeable = False
        object.__setattr__(self, "feature_mask", mask)


def body_part_mask(skeleton: Skeleton, part: str) -> BodyPartMask:
    """Mask freezing everything except `part`'s joints (root moves only with lower_body)."""
    if part not in skeleton.body_parts:
        raise ValueError(f"unknown body part {part!r}; valid parts: {', '.join(PART_NAMES)}")
    joints = skeleton.body_parts[part]
    mask = np.ones(FEATURE_DIM, dtype=bool)
    mask[:3] = part != "lower_body"
    for j in range(JOINT_COUNT):
        if j in joints:
            mask[3 + 6 * j: 9 + 6 * j] = False
    return BodyPartMask(part=part, joint_indices=frozenset(joints), feature_mask=mask)


# ---------------------------------------------------------------------------
# Forward kinematics
# ---------------------------------------------------------------------------

def forward_kinematics(skeleton: Skeleton, frame: np.ndarray) -> np.ndarray:
    """World joint positions (22, 3) for one feature row."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != (FEATURE_DIM,):
        raise ValueError(f"frame must have {FEATURE_DIM} entries")
    if not np.isfinite(frame).all():
        raise ValueError("frame contains non-finite values")
    local = gram_schmidt_6d(frame[3:].reshape(JOINT_COUNT, 6))
    positions = np.empty((JOINT_COUNT, 3), dtype=np.float64)
    world = np.empty((JOINT_COUNT, 3, 3), dtype=np.float64)
    positions[0] = frame[:3]
    world[0] = local[0]
    for j in range(1, JOINT_COUNT):
        p = skeleton.parents[j]
        positions[j] = positions[p] + world[p] @ skeleton.rest_offsets[j]
        world[j] = world[p] @ local[j]
    return positions


def forward_kinematics_sequence(skeleton: Skeleton, frames: np.ndarray) -> np.ndarray:
    """World joint positions (F, 22, 3) for a whole feature matrix."""
    frames = np.asarray(frames, dtype=np.float64)
    local = gram_schmidt_6d(frames_to_blocks(frames))  # (F, 22, 3, 3)
    n = frames.shape[0]
    positions = np.empty((n, JOINT_COUNT, 3), dtype=np.float64)
    world = np.empty((n, JOINT_COUNT, 3, 3), dtype=np.float64)
    positions[:, 0] = frames[:, :3]
    world[:, 0] = local[:, 0]
    for j in range(1, JOINT_COUNT):
        p = skeleton.parents[j]
        positions[:, j] = positions[:, p] + np.einsum("fab,b->fa", world[:, p], skeleton.rest_offsets[j])
        world[:, j] = world[:, p] @ local[:, j]
    return positions


# ---------------------------------------------------------------------------
# Temporal operators
# ---------------------------------------------------------------------------

def low_pass_frames(frames: np.ndarray, stride: int) -> np.ndarray:
    """Knot-subsample + linear interpolation smoother on a raw (F, D) matrix.

    Knots sit at 0, stride, 2*stride, ... and always at F-1; every frame is
    rebuilt by per-channel linear interpolation between knots. Knot frames are
    reproduced bit-exactly, which makes the filter exactly idempotent.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n = frames.shape[0]
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if stride >= n:
        raise ValueError("stride too large")
    knots = np.arange(0, n, stride)
    if knots[-1] != n - 1:
        knots = np.append(knots, n - 1)
    xs = np.arange(n, dtype=np.float64)
    out = np.empty_like(frames)
    for c in range(frames.shape[1]):
        out[:, c] = np.interp(xs, knots.astype(np.float64), frames[knots, c])
    return out


def low_pass(seq: MotionSequence, stride: int) -> MotionSequence:
    """The smoothing filter used by style transfer, applied to a sequence.

    The smoothed rotation channels are generally off-manifold; callers doing
    style algebra work on raw matrices via `low_pass_frames`. This wrapper
    renormalizes so the result is a valid sequence.
    """
    return MotionSequence.from_raw(low_pass_frames(seq.frames, stride), fps=seq.fps)


def slice_sequence(seq: MotionSequence, start_frame: int, end_frame: int) -> MotionSequence:
    """Exact frame copies of [start_frame, end_frame)."""
    if not 0 <= start_frame < end_frame <= seq.frame_count:
        raise ValueError(
            f"invalid slice [{start_frame}, {end_frame}) for {seq.frame_count} frames"
        )
    return MotionSequence(seq.frames[start_frame:end_frame], fps=seq.fps)


def concat(seq_a: MotionSequence, seq_b: MotionSequence) -> MotionSequence:
    """Concatenate two sequences frame-exactly; fps must match."""
    if seq_a.fps != seq_b.fps:
        raise ValueError("cannot concatenate sequences with different fps")
    return MotionSequence(np.concatenate([seq_a.frames, seq_b.frames], axis=0), fps=seq_a.fps)


# ---------------------------------------------------------------------------
# Motion JSON v1
# ---------------------------------------------------------------------------

def to_motion_json(seq: MotionSequence, skeleton: Skeleton) -> dict:
    """The import/export and on-disk gallery payload format."""
    return {
        "format_version": MOTION_JSON_VERSION,
        "fps": seq.fps,
        "joint_names": list(skeleton.joint_names),
        "parents": list(skeleton.parents),
        "rest_offsets": [[float(v) for v in row] for row in skeleton.rest_offsets],
        "frames": [[float(v) for v in row] for row in seq.frames],
    }


def parse_motion_json(doc, skeleton: Skeleton) -> MotionSequence:
    """Validate a motion JSON v1 document against the canonical skeleton.

    Joint count, parent tree, fps and frame width must match; rest offsets are
    accepted as given (sequences do not carry a skeleton of their own).
    """
    if not isinstance(doc, dict):
        raise MotionFormatError("incompatible motion format: payload is not an object")
    if doc.get("format_version") != MOTION_JSON_VERSION:
        raise MotionFormatError("incompatible motion format: unsupported format_version")
    if doc.get("fps") != FPS:
        raise MotionFormatError(f"incompatible motion format: fps must be {FPS}")
    joint_names = doc.get("joint_names")
    parents = doc.get("parents")
    if not isinstance(joint_names, list) or len(joint_names) != JOINT_COUNT:
        raise MotionFormatError(f"incompatible motion format: expected {JOINT_COUNT} joints")
    if not isinstance(parents, list) or tuple(parents) != skeleton.parents:
        raise MotionFormatError("incompatible motion format: parent hierarchy mismatch")
    frames = doc.get("frames")
    if not isinstance(frames, list) or not frames:
        raise MotionFormatError("incompatible motion format: missing frames")
    try:
        arr = np.asarray(frames, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MotionFormatError(f"incompatible motion format: {exc}") from exc
    if arr.ndim != 2 or arr.shape[1] != FEATURE_DIM:
        raise MotionFormatError(
            f"incompatible motion format: frames must be rows of {FEATURE_DIM} numbers"
        )
    try:
        return MotionSequence(arr, fps=int(doc["fps"]))
    except ValueError as exc:
        raise MotionFormatError(f"incompatible motion format: {exc}") from exc

import numpy as np
import pytest

from choreokit.errors import MotionFormatError
from choreokit.motion import (
    FEATURE_DIM,
    JOINT_COUNT,
    MAX_FRAMES,
    MotionSequence,
    body_part_mask,
    concat,
    forward_kinematics,
    gram_schmidt_6d,
    low_pass,
    low_pass_frames,
    normalize_rotation_blocks,
    parse_motion_json,
    rotmat_to_6d,
    slice_sequence,
    to_motion_json,
)

from .conftest import random_motion


# ---------------------------------------------------------------------------
# skeleton
# ---------------------------------------------------------------------------

def test_default_skeleton_structure(skeleton):
    assert len(skeleton.joint_names) == 22
    assert skeleton.parents[0] == -1
    assert skeleton.parents[15] == 12  # head under neck
    assert skeleton.body_parts["left_arm"] == {13, 16, 18, 20}
    assert skeleton.body_parts["right_arm"] == {14, 17, 19, 21}
    union = skeleton.body_parts["upper_body"] | skeleton.body_parts["lower_body"]
    assert union == set(range(22))
    assert skeleton.body_parts["left_arm"] <= skeleton.body_parts["upper_body"]
    assert skeleton.body_parts["left_leg"] <= skeleton.body_parts["lower_body"]


def test_skeleton_rejects_bad_parent_order(skeleton):
    from choreokit.motion import Skeleton

    parents = list(skeleton.parents)
    parents[5] = 9  # parent after child
    with pytest.raises(ValueError):
        Skeleton(skeleton.joint_names, tuple(parents), skeleton.rest_offsets,
                 dict(skeleton.body_parts))


def test_body_part_mask_layout(skeleton):
    mask = body_part_mask(skeleton, "left_arm")
    for j in range(JOINT_COUNT):
        block = mask.feature_mask[3 + 6 * j: 9 + 6 * j]
        assert block.all() == (j not in {13, 16, 18, 20})
    assert mask.feature_mask[:3].all()  # root frozen unless editing lower_body

    lower = body_part_mask(skeleton, "lower_body")
    assert not lower.feature_mask[:3].any()

    with pytest.raises(ValueError, match="upper_body"):
        body_part_mask(skeleton, "torso")


# ---------------------------------------------------------------------------
# forward kinematics
# ---------------------------------------------------------------------------

def _identity_frame(root=(0.0, 0.0, 0.0)):
    frame = np.zeros(FEATURE_DIM)
    frame[:3] = root
    frame[3:] = np.tile(rotmat_to_6d(np.eye(3)), JOINT_COUNT)
    return frame


def _chain_to_root(skeleton, j):
    chain = []
    while j != -1:
        chain.append(j)
        j = skeleton.parents[j]
    return chain


def brute_force_fk(skeleton, frame):
    """Independent oracle: 4x4 homogeneous matrix chains multiplied per joint."""
    local_rots = gram_schmidt_6d(frame[3:].reshape(JOINT_COUNT, 6))
    mats = []
    for j in range(JOINT_COUNT):
        m = np.eye(4)
        m[:3, :3] = local_rots[j]
        m[:3, 3] = frame[:3] if j == 0 else skeleton.rest_offsets[j]
        if j == 0:
            mats.append(m)
        else:
            mats.append(mats[skeleton.parents[j]] @ m)
    return np.array([m[:3, 3] for m in mats])


def test_fk_identity_pose_cumulative_offsets(skeleton):
    positions = forward_kinematics(skeleton, _identity_frame())
    for j in range(JOINT_COUNT):
        expected = sum(
            (skeleton.rest_offsets[k] for k in _chain_to_root(skeleton, j) if k != 0),
            np.zeros(3),
        )
        assert np.allclose(positions[j], expected, atol=1e-12)


def test_fk_translation_equivariance(skeleton):
    rng = np.random.default_rng(4)
    for _ in range(20):
        frame = random_motion(rng, 1).frames[0].copy()
        shift = rng.standard_normal(3)
        base = forward_kinematics(skeleton, frame)
        frame2 = frame.copy()
        frame2[:3] += shift
        moved = forward_kinematics(skeleton, frame2)
        assert np.allclose(moved, base + shift, atol=1e-12)


def test_fk_90_degree_pelvis_rotation(skeleton):
    # hand-computed: Rz(90) applied to the left-knee offset (0, -0.38, 0) -> (0.38, 0, 0)
    frame = _identity_frame(root=(0.5, 0.2, -0.1))
    rz90 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    frame[3:9] = rotmat_to_6d(rz90)
    positions = forward_kinematics(skeleton, frame)
    hip = positions[1]  # pelvis child at offset (0.09, -0.07, 0) -> rotated (0.07, 0.09, 0)
    assert np.allclose(hip, [0.5 + 0.07, 0.2 + 0.09, -0.1], atol=1e-12)
    knee = positions[4]
    # knee offset under rotated hip frame: both pelvis and hip world rotation = Rz(90)
    assert np.allclose(knee - hip, rz90 @ np.array([0.0, -0.38, 0.0]), atol=1e-12)
    assert np.allclose(knee - hip, [0.38, 0.0, 0.0], atol=1e-12)


def test_fk_matches_brute_force_matrix_chain(skeleton):
    rng = np.random.default_rng(11)
    for _ in range(25):
        frame = random_motion(rng, 1).frames[0]
        assert np.allclose(forward_kinematics(skeleton, frame),
                           brute_force_fk(skeleton, frame), atol=1e-10)


def test_fk_rejects_non_finite(skeleton):
    frame = _identity_frame()
    frame[40] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        forward_kinematics(skeleton, frame)


# ---------------------------------------------------------------------------
# rotation math
# ---------------------------------------------------------------------------

def test_gram_schmidt_orthonormal_on_random_blocks():
    rng = np.random.default_rng(2)
    blocks = rng.standard_normal((500, 6))
    rots = gram_schmidt_6d(blocks)
    eye = np.eye(3)
    prod = np.einsum("nij,nik->njk", rots, rots)
    assert np.max(np.abs(prod - eye)) < 1e-6
    assert np.allclose(np.linalg.det(rots), 1.0, atol=1e-9)


def test_gram_schmidt_degenerate_inputs_total():
    cases = np.array([
        [0, 0, 0, 0, 0, 0],            # everything zero
        [1, 0, 0, 2, 0, 0],            # parallel columns
        [0, 0, 1, 0, 0, -3],           # anti-parallel along the fallback axis
    ], dtype=float)
    rots = gram_schmidt_6d(cases)
    prod = np.einsum("nij,nik->njk", rots, rots)
    assert np.max(np.abs(prod - np.eye(3))) < 1e-9
    assert np.all(np.isfinite(rots))


# ---------------------------------------------------------------------------
# low-pass filter
# ---------------------------------------------------------------------------

def test_low_pass_constant_identity():
    frames = np.tile(np.arange(FEATURE_DIM, dtype=float), (30, 1))
    assert np.array_equal(low_pass_frames(frames, 4), frames)


def test_low_pass_linear_ramp_identity():
    ramp = np.outer(np.arange(50, dtype=float), np.linspace(-2, 2, FEATURE_DIM))
    out = low_pass_frames(ramp, 7)
    assert np.allclose(out, ramp, atol=1e-9)


def test_low_pass_stride_one_is_identity():
    rng = np.random.default_rng(3)
    frames = rng.standard_normal((40, FEATURE_DIM))
    assert np.array_equal(low_pass_frames(frames, 1), frames)


def test_low_pass_stride_too_large():
    frames = np.zeros((10, FEATURE_DIM))
    with pytest.raises(ValueError, match="stride too large"):
        low_pass_frames(frames, 10)


def test_low_pass_idempotent_bit_exact():
    rng = np.random.default_rng(5)
    for stride in (2, 4, 7):
        frames = rng.standard_normal((45, FEATURE_DIM))
        once = low_pass_frames(frames, stride)
        assert np.array_equal(low_pass_frames(once, stride), once)


def test_low_pass_linear_in_values():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((33, FEATURE_DIM))
    y = rng.standard_normal((33, FEATURE_DIM))
    a, b = 1.7, -0.4
    lhs = low_pass_frames(a * x + b * y, 4)
    rhs = a * low_pass_frames(x, 4) + b * low_pass_frames(y, 4)
    assert np.max(np.abs(lhs - rhs)) < 1e-6


def test_low_pass_sequence_wrapper_renormalizes():
    rng = np.random.default_rng(7)
    seq = random_motion(rng, 30)
    out = low_pass(seq, 4)
    assert out.frame_count == 30 and out.fps == seq.fps
    # knot frames of a valid sequence survive (renormalization of an
    # orthonormal block is a no-op up to float epsilon)
    assert np.allclose(out.frames[0], seq.frames[0], atol=1e-9)


# ---------------------------------------------------------------------------
# slicing / concat / sequence invariants
# ---------------------------------------------------------------------------

def test_slice_full_range_and_partition():
    rng = np.random.default_rng(8)
    seq = random_motion(rng, 50)
    assert np.array_equal(slice_sequence(seq, 0, 50).frames, seq.frames)
    left = slice_sequence(seq, 0, 20)
    right = slice_sequence(seq, 20, 50)
    assert np.array_equal(concat(left, right).frames, seq.frames)


def test_concat_length_additivity():
    rng = np.random.default_rng(9)
    a = random_motion(rng, 40)
    b = random_motion(rng, 60)
    assert concat(a, b).frame_count == 100


def test_slice_out_of_range():
    rng = np.random.default_rng(10)
    seq = random_motion(rng, 10)
    for bad in [(-1, 5), (0, 11), (7, 7), (8, 2)]:
        with pytest.raises(ValueError):
            slice_sequence(seq, *bad)


def test_concat_fps_mismatch():
    rng = np.random.default_rng(12)
    a = random_motion(rng, 10)
    b = MotionSequence(random_motion(rng, 10).frames, fps=30)
    with pytest.raises(ValueError, match="fps"):
        concat(a, b)


def test_motion_sequence_invariants():
    with pytest.raises(ValueError, match="frame count"):
        MotionSequence(np.zeros((0, FEATURE_DIM)))
    with pytest.raises(ValueError, match="frame count"):
        random_motion(np.random.default_rng(0), MAX_FRAMES + 1)
    frames = random_motion(np.random.default_rng(1), 5).frames.copy()
    frames[2, 30] = np.inf
    with pytest.raises(ValueError, match="non-finite"):
        MotionSequence(frames)
    frames = random_motion(np.random.default_rng(2), 5).frames.copy()
    frames[1, 10] += 0.01  # break orthonormality
    with pytest.raises(ValueError, match="orthonormal"):
        MotionSequence(frames)


def test_from_raw_normalizes_and_is_immutable():
    rng = np.random.default_rng(13)
    raw = rng.standard_normal((8, FEATURE_DIM))
    seq = MotionSequence.from_raw(raw)
    assert seq.frame_count == 8
    with pytest.raises(ValueError):
        seq.frames[0, 0] = 1.0


def test_normalize_rotation_blocks_partial_preserves_bits():
    rng = np.random.default_rng(14)
    raw = rng.standard_normal((6, FEATURE_DIM))
    out = normalize_rotation_blocks(raw, joints={5, 6})
    untouched = np.ones(FEATURE_DIM, dtype=bool)
    for j in (5, 6):
        untouched[3 + 6 * j: 9 + 6 * j] = False
    assert np.array_equal(out[:, untouched], raw[:, untouched])
    assert not np.array_equal(out[:, ~untouched], raw[:, ~untouched])


# ---------------------------------------------------------------------------
# motion JSON v1
# ---------------------------------------------------------------------------

def test_motion_json_round_trip(skeleton):
    rng = np.random.default_rng(15)
    seq = random_motion(rng, 12)
    doc = to_motion_json(seq, skeleton)
    assert doc["format_version"] == 1 and doc["fps"] == 20
    back = parse_motion_json(doc, skeleton)
    assert np.array_equal(back.frames, seq.frames)


def test_motion_json_validation(skeleton):
    rng = np.random.default_rng(16)
    doc = to_motion_json(random_motion(rng, 4), skeleton)

    bad = dict(doc, joint_names=doc["joint_names"][:21], parents=doc["parents"][:21])
    with pytest.raises(MotionFormatError, match="incompatible motion format"):
        parse_motion_json(bad, skeleton)

    bad = dict(doc, fps=30)
    with pytest.raises(MotionFormatError, match="fps"):
        parse_motion_json(bad, skeleton)

    bad = dict(doc, frames=[row[:100] for row in doc["frames"]])
    with pytest.raises(MotionFormatError):
        parse_motion_json(bad, skeleton)

    with pytest.raises(MotionFormatError):
        parse_motion_json("not an object", skeleton)

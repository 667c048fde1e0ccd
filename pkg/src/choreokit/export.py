"""Documentation outputs: glTF 2.0 skeleton animation, PNG frame rendering,
and frame-sequence export with a manifest.

The glTF document is JSON-form (.gltf) with a single embedded base64 buffer:
22 nodes mirroring the joint hierarchy (rest offsets as node translations),
one animation with a rotation channel per joint plus one root translation
channel, all LINEAR-sampled at frame_index / fps. Rendering is an orthographic
front view: pixel = ORIGIN + SCALE * (x, -y), 512x512, bones as 2 px lines.
"""

from __future__ import annotations

import base64
import io
import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .motion import (
    JOINT_COUNT,
    MotionSequence,
    Skeleton,
    forward_kinematics,
    frames_to_blocks,
    gram_schmidt_6d,
    matrix_to_quaternion,
)

GLTF_GENERATOR = "choreokit"
FLOAT = 5126  # glTF componentType for float32

CANVAS_SIZE = 512
PROJECTION_SCALE = 120.0  # pixels per meter
PROJECTION_ORIGIN = (256.0, 256.0)
BONE_WIDTH = 2
BONE_COLOR = (230, 230, 235)
BACKGROUND_COLOR = (18, 18, 22)


# ---------------------------------------------------------------------------
# glTF export
# ---------------------------------------------------------------------------

def _continuous_quaternions(quats: np.ndarray) -> np.ndarray:
    # flip signs so consecutive quaternions stay on one hemisphere (clean LERP)
    out = quats.copy()
    for f in range(1, out.shape[0]):
        if np.dot(out[f], out[f - 1]) < 0.0:
            out[f] = -out[f]
    return out


def export_gltf(skeleton: Skeleton, seq: MotionSequence, name: str = "sequence") -> bytes:
    """Serialize a sequence as a self-contained JSON-form .gltf byte buffer."""
    n = seq.frame_count
    times = (np.arange(n, dtype=np.float64) / seq.fps).astype("<f4")
    rot = gram_schmidt_6d(frames_to_blocks(seq.frames))      # (F, 22, 3, 3)
    quats = matrix_to_quaternion(rot)                        # (F, 22, 4) xyzw
    translation = seq.frames[:, :3].astype("<f4")

    payload = bytearray()
    views = []
    accessors = []

    def push(data: np.ndarray, acc_type: str, count: int, minmax=False) -> int:
        data = np.ascontiguousarray(data, dtype="<f4")
        views.append({
            "buffer": 0,
            "byteOffset": len(payload),
            "byteLength": data.nbytes,
        })
        acc = {
            "bufferView": len(views) - 1,
            "componentType": FLOAT,
            "count": count,
            "type": acc_type,
        }
        if minmax:
            flat = data.reshape(count, -1)
            acc["min"] = [float(v) for v in flat.min(axis=0)]
            acc["max"] = [float(v) for v in flat.max(axis=0)]
        accessors.append(acc)
        payload.extend(data.tobytes())
        return len(accessors) - 1

    time_acc = push(times, "SCALAR", n, minmax=True)
    samplers = []
    channels = []
    for j in range(JOINT_COUNT):
        out_acc = push(_continuous_quaternions(quats[:, j]).astype("<f4"), "VEC4", n)
        samplers.append({"input": time_acc, "output": out_acc, "interpolation": "LINEAR"})
        channels.append({"sampler": len(samplers) - 1,
                         "target": {"node": j, "path": "rotation"}})
    trans_acc = push(translation, "VEC3", n)
    samplers.append({"input": time_acc, "output": trans_acc, "interpolation": "LINEAR"})
    channels.append({"sampler": len(samplers) - 1, "target": {"node": 0, "path": "translation"}})

    nodes = []
    for j in range(JOINT_COUNT):
        node = {
            "name": skeleton.joint_names[j],
            "translation": [float(v) for v in skeleton.rest_offsets[j]],
        }
        kids = skeleton.children(j)
        if kids:
            node["children"] = kids
        nodes.append(node)

    doc = {
        "asset": {"version": "2.0", "generator": GLTF_GENERATOR},
        "scene": 0,
        "scenes": [{"name": name, "nodes": [0]}],
        "nodes": nodes,
        "animations": [{"name": name, "samplers": samplers, "channels": channels}],
        "accessors": accessors,
        "bufferViews": views,
        "buffers": [{
            "byteLength": len(payload),
            "uri": "data:application/octet-stream;base64," + base64.b64encode(bytes(payload)).decode(),
        }],
    }
    return json.dumps(doc).encode("utf-8")


# ---------------------------------------------------------------------------
# glTF structural validation
# ---------------------------------------------------------------------------

_COMPONENT_SIZE = {5120: 1, 5121: 1, 5122: 2, 5123: 2, 5125: 4, 5126: 4}
_TYPE_SIZE = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4, "MAT2": 4, "MAT3": 9, "MAT4": 16}

GLTF_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["asset"],
    "properties": {
        "asset": {
            "type": "object",
            "required": ["version"],
            "properties": {"version": {"const": "2.0"}},
        },
        "scene": {"type": "integer", "minimum": 0},
        "scenes": {"type": "array", "minItems": 1, "items": {
            "type": "object",
            "properties": {"nodes": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
        }},
        "nodes": {"type": "array", "items": {
            "type": "object",
            "properties": {
                "children": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "translation": {"type": "array", "minItems": 3, "maxItems": 3,
                                "items": {"type": "number"}},
                "rotation": {"type": "array", "minItems": 4, "maxItems": 4,
                             "items": {"type": "number"}},
                "name": {"type": "string"},
            },
        }},
        "animations": {"type": "array", "items": {
            "type": "object",
            "required": ["channels", "samplers"],
            "properties": {
                "channels": {"type": "array", "minItems": 1, "items": {
                    "type": "object",
                    "required": ["sampler", "target"],
                    "properties": {
                        "sampler": {"type": "integer", "minimum": 0},
                        "target": {
                            "type": "object",
                            "required": ["path"],
                            "properties": {
                                "node": {"type": "integer", "minimum": 0},
                                "path": {"enum": ["translation", "rotation", "scale", "weights"]},
                            },
                        },
                    },
                }},
                "samplers": {"type": "array", "minItems": 1, "items": {
                    "type": "object",
                    "required": ["input", "output"],
                    "properties": {
                        "input": {"type": "integer", "minimum": 0},
                        "output": {"type": "integer", "minimum": 0},
                        "interpolation": {"enum": ["LINEAR", "STEP", "CUBICSPLINE"]},
                    },
                }},
            },
        }},
        "accessors": {"type": "array", "items": {
            "type": "object",
            "required": ["componentType", "count", "type"],
            "properties": {
                "bufferView": {"type": "integer", "minimum": 0},
                "byteOffset": {"type": "integer", "minimum": 0},
                "componentType": {"enum": [5120, 5121, 5122, 5123, 5125, 5126]},
                "count": {"type": "integer", "minimum": 1},
                "type": {"enum": list(_TYPE_SIZE)},
                "min": {"type": "array", "items": {"type": "number"}},
                "max": {"type": "array", "items": {"type": "number"}},
            },
        }},
        "bufferViews": {"type": "array", "items": {
            "type": "object",
            "required": ["buffer", "byteLength"],
            "properties": {
                "buffer": {"type": "integer", "minimum": 0},
                "byteOffset": {"type": "integer", "minimum": 0},
                "byteLength": {"type": "integer", "minimum": 1},
                "byteStride": {"type": "integer", "minimum": 4, "maximum": 252},
            },
        }},
        "buffers": {"type": "array", "items": {
            "type": "object",
            "required": ["byteLength"],
            "properties": {
                "byteLength": {"type": "integer", "minimum": 1},
                "uri": {"type": "string"},
            },
        }},
    },
}


def validate_gltf(doc: dict) -> None:
    """Structural glTF 2.0 validation: JSON shape plus index/byte accounting.

    Raises ValueError with every violation found. Covers the rules for
    the features this exporter emits (no external validator is available).
    """
    import jsonschema

    problems = []
    validator = jsonschema.Draft7Validator(GLTF_SCHEMA)
    for err in validator.iter_errors(doc):
        problems.append(f"schema: {'/'.join(str(p) for p in err.absolute_path)}: {err.message}")

    nodes = doc.get("nodes", [])
    accessors = doc.get("accessors", [])
    views = doc.get("bufferViews", [])
    buffers = doc.get("buffers", [])

    buffer_bytes = []
    for i, buf in enumerate(buffers):
        data = None
        uri = buf.get("uri", "")
        if uri.startswith("data:"):
            try:
                data = base64.b64decode(uri.split(",", 1)[1])
            except Exception as exc:
                problems.append(f"buffers/{i}: undecodable data uri ({exc})")
        if data is not None and len(data) != buf.get("byteLength"):
            problems.append(
                f"buffers/{i}: byteLength {buf.get('byteLength')} != payload {len(data)}"
            )
        buffer_bytes.append(buf.get("byteLength", 0))

    for i, view in enumerate(views):
        b = view.get("buffer", 0)
        if b >= len(buffers):
            problems.append(f"bufferViews/{i}: buffer {b} out of range")
            continue
        end = view.get("byteOffset", 0) + view.get("byteLength", 0)
        if end > buffer_bytes[b]:
            problems.append(f"bufferViews/{i}: extends to {end} past buffer ({buffer_bytes[b]})")

    for i, acc in enumerate(accessors):
        if "bufferView" not in acc:
            continue
        v = acc["bufferView"]
        if v >= len(views):
            problems.append(f"accessors/{i}: bufferView {v} out of range")
            continue
        size = _COMPONENT_SIZE[acc["componentType"]] * _TYPE_SIZE[acc["type"]]
        need = acc.get("byteOffset", 0) + size * acc["count"]
        if need > views[v].get("byteLength", 0):
            problems.append(f"accessors/{i}: needs {need} bytes, view has {views[v].get('byteLength')}")
        if ("min" in acc) != ("max" in acc):
            problems.append(f"accessors/{i}: min/max must come together")

    if "scene" in doc and doc["scene"] >= len(doc.get("scenes", [])):
        problems.append(f"scene index {doc['scene']} out of range")
    for i, scene in enumerate(doc.get("scenes", [])):
        for n in scene.get("nodes", []):
            if n >= len(nodes):
                problems.append(f"scenes/{i}: node {n} out of range")
    seen_child = set()
    for i, node in enumerate(nodes):
        for child in node.get("children", []):
            if child >= len(nodes):
                problems.append(f"nodes/{i}: child {child} out of range")
            elif child in seen_child:
                problems.append(f"nodes/{i}: node {child} has two parents")
            else:
                seen_child.add(child)

    for a, anim in enumerate(doc.get("animations", [])):
        samplers = anim.get("samplers", [])
        for c, chan in enumerate(anim.get("channels", [])):
            if chan.get("sampler", 0) >= len(samplers):
                problems.append(f"animations/{a}/channels/{c}: sampler out of range")
                continue
            target = chan.get("target", {})
            if target.get("node", 0) >= len(nodes):
                problems.append(f"animations/{a}/channels/{c}: target node out of range")
            sampler = samplers[chan["sampler"]]
            inp = accessors[sampler["input"]] if sampler.get("input", -1) < len(accessors) else None
            outp = accessors[sampler["output"]] if sampler.get("output", -1) < len(accessors) else None
            if inp is None or outp is None:
                problems.append(f"animations/{a}/channels/{c}: sampler accessors out of range")
                continue
            if inp["type"] != "SCALAR" or inp["componentType"] != FLOAT:
                problems.append(f"animations/{a}/channels/{c}: input must be float SCALAR")
            if "min" not in inp or "max" not in inp:
                problems.append(f"animations/{a}/channels/{c}: input accessor needs min/max")
            path = target.get("path")
            want = {"rotation": "VEC4", "translation": "VEC3", "scale": "VEC3"}.get(path)
            if want and outp["type"] != want:
                problems.append(f"animations/{a}/channels/{c}: {path} output must be {want}")
            if outp["count"] != inp["count"]:
                problems.append(f"animations/{a}/channels/{c}: output count != input count")

    if problems:
        raise ValueError("invalid glTF document:\n  " + "\n  ".join(problems))


# ---------------------------------------------------------------------------
# 2D rendering
# ---------------------------------------------------------------------------

def project_to_pixels(positions: np.ndarray) -> np.ndarray:
    """Orthographic front view onto the x-y plane, documented constants above."""
    positions = np.asarray(positions, dtype=np.float64)
    px = PROJECTION_ORIGIN[0] + PROJECTION_SCALE * positions[..., 0]
    py = PROJECTION_ORIGIN[1] - PROJECTION_SCALE * positions[..., 1]
    return np.stack([px, py], axis=-1)


def render_frame_png(skeleton: Skeleton, frame: np.ndarray) -> bytes:
    """Deterministic 512x512 PNG of one pose: bones as 2 px line segments."""
    positions = forward_kinematics(skeleton, frame)
    pixels = project_to_pixels(positions)
    img = Image.new("RGB", (CANVAS_SIZE, CANVAS_SIZE), BACKGROUND_COLOR)
    draw = ImageDraw.Draw(img)
    for j in range(1, JOINT_COUNT):
        p = skeleton.parents[j]
        draw.line(
            [tuple(pixels[p]), tuple(pixels[j])],
            fill=BONE_COLOR,
            width=BONE_WIDTH,
        )
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def export_frames(skeleton: Skeleton, seq: MotionSequence, out_dir, every_k: int = 1) -> dict:
    """Write every k-th frame as a PNG plus a manifest; returns the manifest."""
    if every_k < 1:
        raise ValueError("every_k must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    indices = list(range(0, seq.frame_count, every_k))
    names = []
    for idx in indices:
        name = f"frame_{idx:05d}.png"
        (out_dir / name).write_bytes(render_frame_png(skeleton, seq.frames[idx]))
        names.append(name)
    manifest = {
        "fps": seq.fps,
        "every_k": every_k,
        "frame_indices": indices,
        "files": names,
        "count": len(names),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def frames_payload(skeleton: Skeleton, seq: MotionSequence, every_k: int = 1) -> dict:
    """In-memory variant of export_frames for the wire protocol (base64 PNGs)."""
    if every_k < 1:
        raise ValueError("every_k must be >= 1")
    frames = []
    for idx in range(0, seq.frame_count, every_k):
        png = render_frame_png(skeleton, seq.frames[idx])
        frames.append({"index": idx, "png_base64": base64.b64encode(png).decode()})
    return {"fps": seq.fps, "every_k": every_k, "count": len(frames), "frames": frames}

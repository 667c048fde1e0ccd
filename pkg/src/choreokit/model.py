"""Trained-model bundle and checkpoint I/O.

Checkpoint layout: 16-byte magic ("DGEN-CKPT-v1" NUL-padded), little-endian
u32 shape table (tensor count, then ndim + dims per tensor), then the float32
parameter payload in table order. Tensor names, network shape, vocabulary and
training config travel in a JSON sidecar next to the binary.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from .network import NetConfig, make_denoiser
from .text import TextEncoder

MAGIC = b"DGEN-CKPT-v1" + b"\x00" * 4
SIDECAR_SUFFIX = ".meta.json"


@dataclasses.dataclass
class ModelBundle:
    net: NetConfig
    params: dict
    vocabulary: tuple
    schedule_steps: int = 100
    train_info: dict = dataclasses.field(default_factory=dict)

    @property
    def encoder(self) -> TextEncoder:
        return TextEncoder(vocabulary=self.vocabulary, embedding_table=self.params["embed"])

    def denoiser(self):
        return make_denoiser(self.params, self.net)


def sidecar_path(path) -> Path:
    return Path(str(path) + SIDECAR_SUFFIX)


def save_checkpoint(bundle: ModelBundle, path) -> None:
    path = Path(path)
    names = sorted(bundle.params)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(names)))
        for name in names:
            arr = bundle.params[name]
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for name in names:
            fh.write(np.ascontiguousarray(bundle.params[name], dtype="<f4").tobytes())
    meta = {
        "checkpoint_format": "DGEN-CKPT-v1",
        "tensor_names": names,
        "net": dataclasses.asdict(bundle.net),
        "vocabulary": list(bundle.vocabulary),
        "schedule_steps": bundle.schedule_steps,
        "train_info": bundle.train_info,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2))


def load_checkpoint(path) -> ModelBundle:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    names = meta["tensor_names"]
    raw = path.read_bytes()
    if raw[:16] != MAGIC:
        raise ValueError(f"{path} is not a DGEN-CKPT-v1 checkpoint")
    off = 16
    (count,) = struct.unpack_from("<I", raw, off)
    off += 4
    if count != len(names):
        raise ValueError(f"shape table lists {count} tensors, sidecar {len(names)}")
    shapes = []
    for _ in range(count):
        (ndim,) = struct.unpack_from("<I", raw, off)
        off += 4
        dims = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        shapes.append(dims)
    params = {}
    for name, shape in zip(names, shapes):
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f4", count=n, offset=off).astype(np.float64)
        off += 4 * n
        params[name] = arr.reshape(shape)
    if off != len(raw):
        raise ValueError(f"checkpoint has {len(raw) - off} trailing bytes")
    return ModelBundle(
        net=NetConfig(**meta["net"]),
        params=params,
        vocabulary=tuple(meta["vocabulary"]),
        schedule_steps=int(meta["schedule_steps"]),
        train_info=meta.get("train_info", {}),
    )

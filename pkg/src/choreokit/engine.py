"""Facade tying the trained model, the store, editing and export together.

Every operation here is what one protocol request does: generate variants,
apply one edit, import a pose file, export documentation. New records carry
the full provenance chain of their base plus one entry describing the edit.
"""

from __future__ import annotations

from . import editing
from .diffusion import NoiseSchedule, cosine_schedule
from .editing import (
    BlendCommand,
    EditCommand,
    ExtendCommand,
    PartialBodyCommand,
    StyleCommand,
    StyleLibrary,
)
from .export import export_gltf, frames_payload, render_frame_png
from .gallery import ProvenanceEntry, SequenceRecord, SequenceStore, new_sequence_id, utc_now
from .model import ModelBundle
from .motion import parse_motion_json, to_motion_json

DEFAULT_GUIDANCE = 2.5
DEFAULT_VARIANTS = 3


class Engine:
    def __init__(
        self,
        bundle: ModelBundle,
        store: SequenceStore,
        sched: NoiseSchedule | None = None,
        style_library: StyleLibrary | None = None,
        guidance_scale: float = DEFAULT_GUIDANCE,
    ):
        self.bundle = bundle
        self.store = store
        self.skeleton = store.skeleton
        self.sched = sched if sched is not None else cosine_schedule(bundle.schedule_steps)
        self.style_library = style_library if style_library is not None else StyleLibrary.default()
        self.guidance_scale = guidance_scale
        self.denoiser = bundle.denoiser()
        self.encoder = bundle.encoder

    # -- creation ------------------------------------------------------------

    def generate(self, prompt: str, duration_s: float, n: int = DEFAULT_VARIANTS,
                 seed: int = 0) -> list:
        """Sample `n` variants for a prompt and store each with a Generate root."""
        cond = self.encoder.encode(prompt)
        variants = editing.generate_variants(
            self.denoiser, cond, duration_s, n, seed, self.sched, self.guidance_scale
        )
        records = []
        for i, motion in enumerate(variants):
            record = SequenceRecord(
                id=new_sequence_id(),
                motion=motion,
                provenance=(ProvenanceEntry("Generate", prompt, (), seed + i),),
                created_at=utc_now(),
            )
            self.store.put(record)
            records.append(record)
        return records

    def import_motion(self, doc: dict, source: str = "pose file") -> SequenceRecord:
        motion = parse_motion_json(doc, self.skeleton)
        record = SequenceRecord(
            id=new_sequence_id(),
            motion=motion,
            provenance=(ProvenanceEntry("Import", source, (), None),),
            created_at=utc_now(),
        )
        self.store.put(record)
        return record

    # -- editing ---------------------------------------------------------------

    def _root_prompt(self, record: SequenceRecord) -> str | None:
        root = record.provenance[0]
        return root.prompt_or_params if root.kind == "Generate" else None

    def edit(self, base_id: str, command: EditCommand, seed: int = 0) -> SequenceRecord:
        base = self.store.get(base_id)

        if isinstance(command, ExtendCommand):
            prompt = command.prompt or self._root_prompt(base)
            cond = self.encoder.encode(prompt) if prompt else None
            motion = editing.extend(self.denoiser, base.motion, command.seconds, cond,
                                    seed, self.sched, self.guidance_scale)
            entry = ProvenanceEntry(
                "Extend",
                f"seconds={command.seconds}" + (f"; prompt={prompt}" if prompt else ""),
                (base_id,), seed,
            )
        elif isinstance(command, StyleCommand):
            motion = editing.style_transfer(base.motion, command.name, self.style_library)
            entry = ProvenanceEntry("Style", f"style={command.name}", (base_id,), None)
        elif isinstance(command, PartialBodyCommand):
            cond = self.encoder.encode(command.prompt)
            motion = editing.partial_body_edit(self.denoiser, self.skeleton, base.motion,
                                               command.part, cond, seed, self.sched,
                                               self.guidance_scale)
            entry = ProvenanceEntry(
                "PartialBody", f"part={command.part}; prompt={command.prompt}",
                (base_id,), seed,
            )
        elif isinstance(command, BlendCommand):
            other = self.store.get(command.other_sequence_id)
            motion = editing.blend(self.denoiser, base.motion, other.motion, seed, self.sched)
            entry = ProvenanceEntry(
                "Blend", f"other={command.other_sequence_id}",
                (base_id, command.other_sequence_id), seed,
            )
        else:
            raise ValueError(f"unknown edit command {command!r}")

        record = SequenceRecord(
            id=new_sequence_id(),
            motion=motion,
            provenance=base.provenance + (entry,),
            created_at=utc_now(),
        )
        self.store.put(record)
        return record

    # -- documentation -------------------------------------------------------

    def export_gltf_bytes(self, seq_id: str) -> bytes:
        record = self.store.get(seq_id)
        return export_gltf(self.skeleton, record.motion, name=seq_id)

    def export_frames_payload(self, seq_id: str, every_k: int = 1) -> dict:
        record = self.store.get(seq_id)
        return frames_payload(self.skeleton, record.motion, every_k)

    def export_motion_json(self, seq_id: str) -> dict:
        record = self.store.get(seq_id)
        return to_motion_json(record.motion, self.skeleton)

    def thumbnail_png(self, seq_id: str) -> bytes:
        record = self.store.get(seq_id)
        return render_frame_png(self.skeleton, record.motion.frames[0])

    def record_summary(self, record: SequenceRecord, include_motion: bool = False) -> dict:
        doc = {
            "id": record.id,
            "created_at": record.created_at,
            "in_gallery": record.in_gallery,
            "frames": record.motion.frame_count,
            "duration_s": record.motion.duration_s,
            "provenance": [entry.to_json() for entry in record.provenance],
        }
        if include_motion:
            doc["motion"] = to_motion_json(record.motion, self.skeleton)
        return doc

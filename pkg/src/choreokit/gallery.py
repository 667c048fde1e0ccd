"""Sequence identity, provenance chains, the gallery, and on-disk persistence.

Every sequence gets a random 128-bit id and a provenance list tracing back to
a Generate or Import root. The store keeps one JSON file per record (metadata
+ motion JSON v1) plus a first-frame PNG thumbnail, so a crash can corrupt at
most the record being written. Mutations go through a single lock; records are
immutable once stored, readers never see partial state.
"""

from __future__ import annotations

import dataclasses
import datetime
import json
import secrets
import threading
from pathlib import Path

from .errors import UnknownSequenceError
from .motion import MotionSequence, Skeleton, parse_motion_json, to_motion_json

PROVENANCE_KINDS = ("Generate", "Import", "Extend", "Style", "PartialBody", "Blend")
_ROOT_KINDS = ("Generate", "Import")
_PARENT_COUNT = {"Generate": 0, "Import": 0, "Extend": 1, "Style": 1, "PartialBody": 1, "Blend": 2}


def new_sequence_id() -> str:
    return secrets.token_hex(16)


def utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="microseconds")


@dataclasses.dataclass(frozen=True)
class ProvenanceEntry:
    kind: str
    prompt_or_params: str
    parent_ids: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in PROVENANCE_KINDS:
            raise ValueError(f"unknown provenance kind {self.kind!r}")
        parents = tuple(self.parent_ids)
        if len(parents) != _PARENT_COUNT[self.kind]:
            raise ValueError(
                f"{self.kind} entries take {_PARENT_COUNT[self.kind]} parents, got {len(parents)}"
            )
        object.__setattr__(self, "parent_ids", parents)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "prompt_or_params": self.prompt_or_params,
            "parent_ids": list(self.parent_ids),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ProvenanceEntry":
        return cls(
            kind=doc["kind"],
            prompt_or_params=doc["prompt_or_params"],
            parent_ids=tuple(doc.get("parent_ids", ())),
            seed=doc.get("seed"),
        )


@dataclasses.dataclass(frozen=True)
class SequenceRecord:
    id: str
    motion: MotionSequence
    provenance: tuple
    created_at: str
    in_gallery: bool = False
    gallery_seq: int | None = None  # insertion counter; orders the gallery across reloads

    def __post_init__(self):
        entries = tuple(self.provenance)
        if not entries:
            raise ValueError("provenance must be nonempty")
        if entries[0].kind not in _ROOT_KINDS:
            raise ValueError("first provenance entry must be a Generate or Import root")
        object.__setattr__(self, "provenance", entries)

    def to_json(self, skeleton: Skeleton) -> dict:
        return {
            "id": self.id,
            "created_at": self.created_at,
            "in_gallery": self.in_gallery,
            "gallery_seq": self.gallery_seq,
            "provenance": [entry.to_json() for entry in self.provenance],
            "motion": to_motion_json(self.motion, skeleton),
        }

    @classmethod
    def from_json(cls, doc: dict, skeleton: Skeleton) -> "SequenceRecord":
        return cls(
            id=doc["id"],
            motion=parse_motion_json(doc["motion"], skeleton),
            provenance=tuple(ProvenanceEntry.from_json(e) for e in doc["provenance"]),
            created_at=doc["created_at"],
            in_gallery=bool(doc.get("in_gallery", False)),
            gallery_seq=doc.get("gallery_seq"),
        )


class SequenceStore:
    """In-memory record map with optional write-through to a store directory."""

    def __init__(self, skeleton: Skeleton, directory=None):
        self.skeleton = skeleton
        self.directory = Path(directory) if directory is not None else None
        self._records: dict[str, SequenceRecord] = {}
        self._lock = threading.Lock()
        self._gallery_counter = 0
        self.load_errors: list[tuple[str, str]] = []
        if self.directory is not None:
            (self.directory / "records").mkdir(parents=True, exist_ok=True)
            (self.directory / "thumbnails").mkdir(parents=True, exist_ok=True)

    def __len__(self) -> int:
        return len(self._records)

    def ids(self) -> list:
        return list(self._records)

    def put(self, record: SequenceRecord) -> str:
        with self._lock:
            if record.id in self._records:
                raise ValueError(f"duplicate sequence id {record.id}")
            self._records[record.id] = record
            if record.gallery_seq is not None:
                self._gallery_counter = max(self._gallery_counter, record.gallery_seq + 1)
            if self.directory is not None:
                self._write_record(record)
        return record.id

    def get(self, seq_id: str) -> SequenceRecord:
        record = self._records.get(seq_id)
        if record is None:
            raise UnknownSequenceError(seq_id)
        return record

    def add_to_gallery(self, seq_id: str) -> None:
        with self._lock:
            record = self._records.get(seq_id)
            if record is None:
                raise UnknownSequenceError(seq_id)
            if record.in_gallery:
                return
            updated = dataclasses.replace(
                record, in_gallery=True, gallery_seq=self._gallery_counter
            )
            self._gallery_counter += 1
            self._records[seq_id] = updated
            if self.directory is not None:
                self._write_record(updated)

    def list_gallery(self) -> list:
        """Gallery summaries ordered by insertion: id, thumbnail ref, duration."""
        members = [r for r in self._records.values() if r.in_gallery]
        members.sort(key=lambda r: r.gallery_seq)
        return [
            {
                "id": r.id,
                "thumbnail": f"thumbnails/{r.id}.png",
                "duration_s": r.motion.duration_s,
            }
            for r in members
        ]

    # -- persistence --------------------------------------------------------

    def _write_record(self, record: SequenceRecord, directory: Path | None = None) -> None:
        directory = directory if directory is not None else self.directory
        path = directory / "records" / f"{record.id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record.to_json(self.skeleton)))
        tmp.replace(path)
        thumb = directory / "thumbnails" / f"{record.id}.png"
        if not thumb.exists():
            from .export import render_frame_png  # deferred: keeps import graph acyclic

            thumb.write_bytes(render_frame_png(self.skeleton, record.motion.frames[0]))

    def persist(self, directory) -> None:
        """Write every record (and thumbnail) under `directory`."""
        directory = Path(directory)
        (directory / "records").mkdir(parents=True, exist_ok=True)
        (directory / "thumbnails").mkdir(parents=True, exist_ok=True)
        with self._lock:
            for record in self._records.values():
                self._write_record(record, directory)


def persist(store: SequenceStore, directory) -> None:
    store.persist(directory)


def load(directory, skeleton: Skeleton | None = None) -> SequenceStore:
    """Rebuild a store from disk; corrupt files are reported, not fatal."""
    from .motion import build_default_skeleton

    skeleton = skeleton or build_default_skeleton()
    directory = Path(directory)
    store = SequenceStore(skeleton, directory=directory)
    records_dir = directory / "records"
    loaded = []
    for path in sorted(records_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text())
            record = SequenceRecord.from_json(doc, skeleton)
            if record.id != path.stem:
                raise ValueError(f"record id {record.id} does not match filename")
            loaded.append(record)
        except Exception as exc:  # corrupt record: report and continue
            store.load_errors.append((path.stem, str(exc)))
    loaded.sort(key=lambda r: (r.created_at, r.id))
    for record in loaded:
        store._records[record.id] = record
        if record.gallery_seq is not None:
            store._gallery_counter = max(store._gallery_counter, record.gallery_seq + 1)
    return store

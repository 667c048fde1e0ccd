import json

import numpy as np
import pytest

from choreokit.errors import UnknownSequenceError
from choreokit.gallery import (
    ProvenanceEntry,
    SequenceRecord,
    SequenceStore,
    load,
    new_sequence_id,
    persist,
    utc_now,
)

from .conftest import random_motion


def make_record(rng, frames=10, kind="Generate", prompt="spin in place",
                parents=(), seed=5, **kw):
    return SequenceRecord(
        id=new_sequence_id(),
        motion=random_motion(rng, frames),
        provenance=(ProvenanceEntry(kind, prompt, parents, seed),),
        created_at=utc_now(),
        **kw,
    )


def test_new_ids_are_32_hex_and_unique():
    ids = {new_sequence_id() for _ in range(200)}
    assert len(ids) == 200
    assert all(len(i) == 32 and int(i, 16) >= 0 for i in ids)


def test_put_get_round_trip(skeleton):
    rng = np.random.default_rng(0)
    store = SequenceStore(skeleton)
    record = make_record(rng)
    assert store.put(record) == record.id
    assert store.get(record.id) is record


def test_get_unknown_id(skeleton):
    store = SequenceStore(skeleton)
    with pytest.raises(UnknownSequenceError, match="sequence not found"):
        store.get("0" * 32)


def test_duplicate_put_rejected(skeleton):
    rng = np.random.default_rng(1)
    store = SequenceStore(skeleton)
    record = make_record(rng)
    store.put(record)
    with pytest.raises(ValueError, match="duplicate"):
        store.put(record)


def test_gallery_listing_in_insertion_order(skeleton):
    rng = np.random.default_rng(2)
    store = SequenceStore(skeleton)
    records = [make_record(rng) for _ in range(3)]
    for r in records:
        store.put(r)
    store.add_to_gallery(records[1].id)
    store.add_to_gallery(records[0].id)
    listing = store.list_gallery()
    assert [item["id"] for item in listing] == [records[1].id, records[0].id]
    assert listing[0]["thumbnail"] == f"thumbnails/{records[1].id}.png"
    assert listing[0]["duration_s"] == pytest.approx(0.5)
    store.add_to_gallery(records[1].id)  # idempotent
    assert len(store.list_gallery()) == 2
    with pytest.raises(UnknownSequenceError):
        store.add_to_gallery("f" * 32)


def test_provenance_entry_parent_arity():
    ProvenanceEntry("Generate", "p", ())
    ProvenanceEntry("Blend", "b", ("a" * 32, "b" * 32))
    with pytest.raises(ValueError):
        ProvenanceEntry("Generate", "p", ("a" * 32,))
    with pytest.raises(ValueError):
        ProvenanceEntry("Blend", "b", ("a" * 32,))
    with pytest.raises(ValueError):
        ProvenanceEntry("Extend", "e", ())
    with pytest.raises(ValueError, match="kind"):
        ProvenanceEntry("Remix", "r", ())


def test_record_requires_root_provenance():
    rng = np.random.default_rng(3)
    with pytest.raises(ValueError, match="root"):
        SequenceRecord(
            id=new_sequence_id(),
            motion=random_motion(rng, 5),
            provenance=(ProvenanceEntry("Extend", "seconds=5", ("a" * 32,), 1),),
            created_at=utc_now(),
        )
    with pytest.raises(ValueError, match="nonempty"):
        SequenceRecord(id=new_sequence_id(), motion=random_motion(rng, 5),
                       provenance=(), created_at=utc_now())


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_empty_store_round_trip(skeleton, tmp_path):
    store = SequenceStore(skeleton)
    persist(store, tmp_path)
    back = load(tmp_path, skeleton)
    assert len(back) == 0 and back.load_errors == []


def test_three_record_round_trip_with_chains(skeleton, tmp_path):
    rng = np.random.default_rng(4)
    store = SequenceStore(skeleton)
    root = make_record(rng)
    store.put(root)
    child = SequenceRecord(
        id=new_sequence_id(),
        motion=random_motion(rng, 8),
        provenance=root.provenance + (ProvenanceEntry("Extend", "seconds=5", (root.id,), 2),),
        created_at=utc_now(),
    )
    store.put(child)
    other = make_record(rng, kind="Import", prompt="pose file", seed=None)
    store.put(other)
    blend = SequenceRecord(
        id=new_sequence_id(),
        motion=random_motion(rng, 12),
        provenance=child.provenance + (
            ProvenanceEntry("Blend", f"other={other.id}", (child.id, other.id), 3),
        ),
        created_at=utc_now(),
    )
    store.put(blend)
    store.add_to_gallery(blend.id)
    persist(store, tmp_path)

    back = load(tmp_path, skeleton)
    assert back.load_errors == []
    assert set(back.ids()) == set(store.ids())
    for seq_id in store.ids():
        a, b = store.get(seq_id), back.get(seq_id)
        assert np.array_equal(a.motion.frames, b.motion.frames)
        assert a.provenance == b.provenance
        assert a.created_at == b.created_at
        assert a.in_gallery == b.in_gallery
    assert [i["id"] for i in back.list_gallery()] == [blend.id]

    # provenance closure: every parent resolves; no record is its own ancestor
    def ancestors(seq_id, trail):
        assert seq_id not in trail, "provenance cycle"
        rec = back.get(seq_id)  # raises if a parent does not resolve
        for entry in rec.provenance:
            for pid in entry.parent_ids:
                if pid != seq_id:
                    ancestors(pid, trail | {seq_id})

    for seq_id in back.ids():
        ancestors(seq_id, frozenset())


def test_truncated_record_reported_others_load(skeleton, tmp_path):
    rng = np.random.default_rng(5)
    store = SequenceStore(skeleton)
    good = make_record(rng)
    bad = make_record(rng)
    store.put(good)
    store.put(bad)
    persist(store, tmp_path)

    bad_path = tmp_path / "records" / f"{bad.id}.json"
    bad_path.write_bytes(bad_path.read_bytes()[:10])

    back = load(tmp_path, skeleton)
    assert [seq_id for seq_id, _ in back.load_errors] == [bad.id]
    assert back.ids() == [good.id]
    assert np.array_equal(back.get(good.id).motion.frames, good.motion.frames)


def test_write_through_store(skeleton, tmp_path):
    rng = np.random.default_rng(6)
    store = SequenceStore(skeleton, directory=tmp_path)
    record = make_record(rng)
    store.put(record)
    assert (tmp_path / "records" / f"{record.id}.json").exists()
    assert (tmp_path / "thumbnails" / f"{record.id}.png").exists()
    doc = json.loads((tmp_path / "records" / f"{record.id}.json").read_text())
    assert doc["motion"]["format_version"] == 1
    store.add_to_gallery(record.id)
    doc = json.loads((tmp_path / "records" / f"{record.id}.json").read_text())
    assert doc["in_gallery"] is True


def test_edits_do_not_mutate_parent_record(skeleton, sched, tmp_path):
    from choreokit.editing import ExtendCommand
    from choreokit.engine import Engine
    from choreokit.model import ModelBundle
    from choreokit.network import init_params
    from .conftest import TINY_NET

    rng = np.random.default_rng(7)
    params = {k: rng.standard_normal(v.shape) * 0.05
              for k, v in init_params(TINY_NET, 4, rng).items()}
    bundle = ModelBundle(net=TINY_NET, params=params, vocabulary=("arm", "left", "wave"))
    store = SequenceStore(skeleton)
    engine = Engine(bundle, store, sched=sched)
    records = engine.generate("wave left arm", 2.0, n=1, seed=3)
    before = records[0].motion.frames.copy()
    engine.edit(records[0].id, ExtendCommand(seconds=1.0), seed=4)
    after = store.get(records[0].id).motion.frames
    assert np.array_equal(before, after)

import json
import struct
import subprocess
import sys

import numpy as np
import pytest

from choreokit.diffusion import SamplerConfig, cosine_schedule, p_sample_loop
from choreokit.model import load_checkpoint, save_checkpoint, sidecar_path

from .wire_utils import make_test_bundle


# ---------------------------------------------------------------------------
# checkpoint format
# ---------------------------------------------------------------------------

def test_checkpoint_magic_and_shape_table(tmp_path):
    bundle = make_test_bundle()
    path = tmp_path / "model.ckpt"
    save_checkpoint(bundle, path)

    raw = path.read_bytes()
    assert raw[:12] == b"DGEN-CKPT-v1"
    assert raw[12:16] == b"\x00" * 4
    (count,) = struct.unpack_from("<I", raw, 16)
    assert count == len(bundle.params)

    meta = json.loads(sidecar_path(path).read_text())
    assert meta["tensor_names"] == sorted(bundle.params)
    assert meta["vocabulary"] == list(bundle.vocabulary)
    assert meta["net"]["hidden"] == bundle.net.hidden
    assert meta["schedule_steps"] == 100


def test_checkpoint_round_trip_preserves_float32_values(tmp_path):
    bundle = make_test_bundle()
    path = tmp_path / "model.ckpt"
    save_checkpoint(bundle, path)
    loaded = load_checkpoint(path)

    assert loaded.vocabulary == bundle.vocabulary
    assert loaded.net == bundle.net
    assert set(loaded.params) == set(bundle.params)
    for k, v in bundle.params.items():
        assert loaded.params[k].shape == v.shape
        # payload is float32: the loaded values are the f32-rounded originals
        assert np.array_equal(loaded.params[k], v.astype("<f4").astype(np.float64))

    # a loaded model samples deterministically
    sched = cosine_schedule(100)
    cfg = SamplerConfig(seed=5, guidance_scale=1.0, steps=100)
    a = p_sample_loop(loaded.denoiser(), None, (6, 135), None, cfg, sched)
    b = p_sample_loop(load_checkpoint(path).denoiser(), None, (6, 135), None, cfg, sched)
    assert np.array_equal(a, b)


def test_checkpoint_rejects_corrupt_files(tmp_path):
    bundle = make_test_bundle()
    path = tmp_path / "model.ckpt"
    save_checkpoint(bundle, path)

    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"NOT-A-CKPT" + b"\x00" * 64)
    sidecar_path(bad).write_text(sidecar_path(path).read_text())
    with pytest.raises(ValueError, match="DGEN-CKPT-v1"):
        load_checkpoint(bad)

    truncated = tmp_path / "trunc.ckpt"
    truncated.write_bytes(path.read_bytes() + b"\x00\x00")
    sidecar_path(truncated).write_text(sidecar_path(path).read_text())
    with pytest.raises(ValueError, match="trailing"):
        load_checkpoint(truncated)


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def run_cli(*args, timeout=300):
    return subprocess.run([sys.executable, "-m", "choreokit.cli", *args],
                         capture_output=True, text=True, timeout=timeout)


def test_cli_train_export_round_trip(tmp_path):
    ckpt = tmp_path / "tiny.ckpt"
    proc = run_cli("train", "--out", str(ckpt), "--items-per-family", "1",
                   "--duration-s", "1.0", "--epochs", "3", "--hidden", "8",
                   "--blocks", "1", "--seed", "3")
    assert proc.returncode == 0, proc.stderr
    assert ckpt.exists() and sidecar_path(ckpt).exists()

    bundle = load_checkpoint(ckpt)
    assert bundle.net.hidden == 8
    assert bundle.train_info["corpus_items"] == 7


def test_cli_serve_and_client_round_trip(tmp_path):
    ckpt = tmp_path / "tiny.ckpt"
    save_checkpoint(make_test_bundle(), ckpt)
    store = tmp_path / "store"

    server = subprocess.Popen(
        [sys.executable, "-m", "choreokit.cli", "serve", "--port", "0",
         "--store", str(store), "--model", str(ckpt), "--seed", "1"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True,
    )
    try:
        port = None
        for _ in range(100):
            line = server.stdout.readline()
            if "listening on" in line:
                port = int(line.rsplit(":", 1)[1])
                break
        assert port, "server did not report its port"

        envelope = json.dumps({"request_id": "c1", "op": "generate",
                               "params": {"prompt": "side step", "duration_s": 0.5, "n": 1},
                               "seed": 2})
        proc = run_cli("client", "--port", str(port), "--json", envelope, timeout=60)
        assert proc.returncode == 0, proc.stderr
        response = json.loads(proc.stdout)
        assert response["status"] == "ok"
        seq_id = response["payload"]["ids"][0]

        out = tmp_path / "motion.json"
        proc = run_cli("export", "--store", str(store), "--id", seq_id,
                       "--format", "motion-json", "--out", str(out))
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(out.read_text())
        assert doc["format_version"] == 1
        assert len(doc["frames"]) == 10
    finally:
        server.terminate()
        server.wait(timeout=10)

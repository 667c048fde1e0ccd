"""Command line entry points: serve the protocol, train a checkpoint, act as a
thin protocol client, or export documentation straight from a store."""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
from pathlib import Path

from .corpus import CorpusSpec, STYLE_NAMES, generate_corpus
from .diffusion import cosine_schedule
from .engine import Engine
from .gallery import SequenceStore, load as load_store
from .model import ModelBundle, load_checkpoint, save_checkpoint
from .motion import build_default_skeleton
from .network import NetConfig
from .server import DEFAULT_PORT, serve
from .training import TrainConfig, train, train_two_stage


def _add_serve(sub):
    p = sub.add_parser("serve", help="run the TCP protocol server")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", required=True, help="store directory (created if missing)")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--seed", type=int, default=0, help="master seed for unseeded requests")
    p.add_argument("--log-level", default="info",
                   choices=["debug", "info", "warning", "error"])


def _add_train(sub):
    p = sub.add_parser("train", help="train a denoiser checkpoint on the synthetic corpus")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--items-per-family", type=int, default=2)
    p.add_argument("--duration-s", type=float, default=2.0)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--steps", type=int, default=100, help="diffusion step count")
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--blocks", type=int, default=4)
    p.add_argument("--styled", action="store_true",
                   help="add styled items and run the two-stage (freeze-embedding) recipe")
    p.add_argument("--log-level", default="info",
                   choices=["debug", "info", "warning", "error"])


def _add_client(sub):
    p = sub.add_parser("client", help="send one request envelope and print the response")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--json", required=True, help="request envelope as a JSON string")


def _add_export(sub):
    p = sub.add_parser("export", help="export documentation from a store directory")
    p.add_argument("--store", required=True)
    p.add_argument("--id", required=True, dest="seq_id")
    p.add_argument("--format", required=True, choices=["gltf", "frames", "motion-json"])
    p.add_argument("--out", required=True, help="output file (gltf/motion-json) or directory (frames)")
    p.add_argument("--every-k", type=int, default=1)


def cmd_serve(args) -> int:
    logging.basicConfig(level=args.log_level.upper(),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    skeleton = build_default_skeleton()
    store_dir = Path(args.store)
    if (store_dir / "records").exists():
        store = load_store(store_dir, skeleton)
        for seq_id, msg in store.load_errors:
            logging.getLogger("choreokit").warning("skipping corrupt record %s: %s", seq_id, msg)
    else:
        store = SequenceStore(skeleton, directory=store_dir)
    bundle = load_checkpoint(args.model)
    engine = Engine(bundle, store)
    serve(engine, host=args.host, port=args.port, seed=args.seed)
    return 0


def cmd_train(args) -> int:
    logging.basicConfig(level=args.log_level.upper(), format="%(message)s")
    log = logging.getLogger("choreokit.train")
    net_cfg = NetConfig(hidden=args.hidden, blocks=args.blocks)
    sched = cosine_schedule(args.steps)
    spec = CorpusSpec(
        items_per_family=args.items_per_family,
        duration_s=args.duration_s,
        styles=STYLE_NAMES if args.styled else (),
    )
    corpus = generate_corpus(spec, seed=args.seed)
    log.info("corpus: %d items", len(corpus))
    cfg = TrainConfig(learning_rate=args.learning_rate, batch_size=args.batch_size,
                      epochs=args.epochs, seed=args.seed)
    if args.styled:
        stage1, result = train_two_stage(corpus, cfg, cfg, sched, net_cfg)
        log.info("stage 1 final loss %.5f; stage 2 final loss %.5f",
                 stage1.history[-1], result.history[-1])
        history = stage1.history + result.history
    else:
        result = train(corpus, cfg, sched, net_cfg)
        history = result.history
        log.info("final loss %.5f after %d steps", history[-1], len(history))
    bundle = ModelBundle(
        net=net_cfg,
        params=result.params,
        vocabulary=result.encoder.vocabulary,
        schedule_steps=args.steps,
        train_info={"final_loss": history[-1], "steps": len(history),
                    "corpus_items": len(corpus), "seed": args.seed},
    )
    save_checkpoint(bundle, args.out)
    log.info("checkpoint written to %s", args.out)
    return 0


def cmd_client(args) -> int:
    envelope = json.loads(args.json)
    with socket.create_connection((args.host, args.port)) as sock:
        sock.sendall(json.dumps(envelope).encode("utf-8") + b"\n")
        buf = b""
        while not buf.endswith(b"\n"):
            chunk = sock.recv(65536)
            if not chunk:
                break
            buf += chunk
    sys.stdout.write(buf.decode("utf-8"))
    return 0


def cmd_export(args) -> int:
    from .export import export_frames, export_gltf

    skeleton = build_default_skeleton()
    store = load_store(args.store, skeleton)
    record = store.get(args.seq_id)
    if args.format == "gltf":
        Path(args.out).write_bytes(export_gltf(skeleton, record.motion, name=record.id))
    elif args.format == "frames":
        export_frames(skeleton, record.motion, args.out, every_k=args.every_k)
    else:
        from .motion import to_motion_json

        Path(args.out).write_text(json.dumps(to_motion_json(record.motion, skeleton)))
    print(f"wrote {args.format} export for {args.seq_id} to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="choreokit",
                                     description="dance-sequence ideation engine")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_serve(sub)
    _add_train(sub)
    _add_client(sub)
    _add_export(sub)
    args = parser.parse_args(argv)
    return {"serve": cmd_serve, "train": cmd_train,
            "client": cmd_client, "export": cmd_export}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())

"""Newline-delimited JSON protocol over TCP.

One request envelope per line: {"request_id", "op", "params", "seed"?}. Every
request gets exactly one response line {"request_id", "status", "payload"};
heavy operations (generate, edit) go through a FIFO queue drained by a single
worker so completion order equals enqueue order across all connections; light
operations answer immediately. Lines are capped at 16 MiB; a malformed line
yields a bad_request error carrying the offending byte offset and the
connection stays open.
"""

from __future__ import annotations

import asyncio
import base64
import contextlib
import json
import logging
import signal
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .editing import BlendCommand, ExtendCommand, PartialBodyCommand, StyleCommand
from .engine import Engine
from .errors import EngineError, MotionFormatError, UnknownSequenceError

log = logging.getLogger("choreokit.server")

MAX_LINE_BYTES = 16 * 1024 * 1024
DEFAULT_PORT = 7701

OPS = ("generate", "edit", "import_pose", "list_gallery", "add_to_gallery",
       "get_sequence", "export")
HEAVY_OPS = ("generate", "edit")

EXPORT_FORMATS = ("gltf", "frames", "motion-json")


class RequestError(Exception):
    """Maps straight to an error response."""

    def __init__(self, code: str, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.code = code
        self.byte_offset = byte_offset


def parse_edit_command(obj):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise RequestError("invalid_params", "edit must be an object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "extend":
            return ExtendCommand(seconds=float(obj["seconds"]), prompt=obj.get("prompt"))
        if kind == "style":
            return StyleCommand(name=str(obj["name"]))
        if kind == "partial_body":
            return PartialBodyCommand(part=str(obj["part"]), prompt=str(obj["prompt"]))
        if kind == "blend":
            return BlendCommand(other_sequence_id=str(obj["other_id"]))
    except KeyError as exc:
        raise RequestError("invalid_params", f"edit kind {kind!r} missing field {exc}") from exc
    raise RequestError("invalid_params",
                       f"unknown edit kind {kind!r}; valid: extend, style, partial_body, blend")


class ProtocolServer:
    def __init__(self, engine: Engine, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 seed: int = 0, max_line_bytes: int = MAX_LINE_BYTES):
        self.engine = engine
        self.host = host
        self.port = port
        self.max_line_bytes = max_line_bytes
        self._seed_rng = np.random.default_rng(seed)
        self._queue: asyncio.Queue = asyncio.Queue()
        self._server = None
        self._worker_task = None
        self._pool = ThreadPoolExecutor(max_workers=1)

    # -- lifecycle -----------------------------------------------------------

    async def start(self) -> None:
        self._server = await asyncio.start_server(self._handle_connection, self.host, self.port)
        self._worker_task = asyncio.ensure_future(self._worker())
        log.info("listening on %s:%d", self.host, self.bound_port)

    @property
    def bound_port(self) -> int:
        return self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        if self._worker_task is not None:
            await self._queue.put(None)
            await self._worker_task
        self._pool.shutdown(wait=True)

    async def serve_until(self, stop_event: asyncio.Event) -> None:
        await self.start()
        await stop_event.wait()
        await self.stop()

    # -- framing -------------------------------------------------------------

    async def _handle_connection(self, reader: asyncio.StreamReader,
                                 writer: asyncio.StreamWriter) -> None:
        peer = writer.get_extra_info("peername")
        log.info("connection from %s", peer)
        seen_ids: set[str] = set()
        buf = bytearray()
        discarding = False
        try:
            while True:
                chunk = await reader.read(65536)
                if not chunk:
                    break
                buf.extend(chunk)
                while True:
                    nl = buf.find(b"\n")
                    if nl < 0:
                        break
                    line = bytes(buf[:nl])
                    del buf[:nl + 1]
                    if discarding:
                        discarding = False  # tail of an oversize line
                        continue
                    if len(line) > self.max_line_bytes:
                        self._send(writer, self._error_response(
                            None, "bad_request",
                            f"line exceeds {self.max_line_bytes} byte cap",
                            byte_offset=self.max_line_bytes,
                        ))
                        continue
                    if line.strip():
                        await self._handle_line(line, seen_ids, writer)
                if len(buf) > self.max_line_bytes:
                    self._send(writer, self._error_response(
                        None, "bad_request",
                        f"line exceeds {self.max_line_bytes} byte cap", byte_offset=self.max_line_bytes,
                    ))
                    buf.clear()
                    discarding = True
        except (ConnectionResetError, asyncio.IncompleteReadError):
            pass
        finally:
            writer.close()
            with contextlib.suppress(Exception):
                await writer.wait_closed()
            log.info("connection closed %s", peer)

    async def _handle_line(self, line: bytes, seen_ids: set, writer) -> None:
        request_id = None
        try:
            try:
                text = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise RequestError("bad_request", f"invalid utf-8 at byte {exc.start}",
                                   byte_offset=exc.start) from exc
            try:
                envelope = json.loads(text)
            except json.JSONDecodeError as exc:
                offset = len(text[:exc.pos].encode("utf-8"))
                raise RequestError("bad_request", f"malformed JSON: {exc.msg} at byte {offset}",
                                   byte_offset=offset) from exc
            if not isinstance(envelope, dict):
                raise RequestError("bad_request", "envelope must be a JSON object")
            request_id = envelope.get("request_id")
            if not isinstance(request_id, str) or not request_id:
                request_id = None
                raise RequestError("bad_request", "request_id must be a nonempty string")
            if request_id in seen_ids:
                raise RequestError("bad_request",
                                   f"request_id {request_id!r} already used on this connection")
            seen_ids.add(request_id)
            op = envelope.get("op")
            if op not in OPS:
                raise RequestError("unknown_op", f"unknown op {op!r}; valid ops: {', '.join(OPS)}")
            params = envelope.get("params", {})
            if not isinstance(params, dict):
                raise RequestError("invalid_params", "params must be an object")
            seed = envelope.get("seed")
            if seed is None:
                seed = int(self._seed_rng.integers(0, 2**63))
            elif not isinstance(seed, int):
                raise RequestError("invalid_params", "seed must be an integer")

            if op in HEAVY_OPS:
                await self._queue.put((writer, request_id, op, params, seed))
            else:
                response = await self._run_op(request_id, op, params, seed)
                self._send(writer, response)
        except RequestError as exc:
            self._send(writer, self._error_response(request_id, exc.code, str(exc),
                                                    byte_offset=exc.byte_offset))

    # -- queue worker ----------------------------------------------------------

    async def _worker(self) -> None:
        while True:
            job = await self._queue.get()
            if job is None:
                return
            writer, request_id, op, params, seed = job
            response = await self._run_op(request_id, op, params, seed)
            if not writer.is_closing():
                self._send(writer, response)

    async def _run_op(self, request_id, op, params, seed) -> bytes:
        loop = asyncio.get_running_loop()
        try:
            payload = await loop.run_in_executor(self._pool, self._execute, op, params, seed)
            return self._ok_response(request_id, payload)
        except RequestError as exc:
            return self._error_response(request_id, exc.code, str(exc))
        except UnknownSequenceError as exc:
            return self._error_response(request_id, exc.code, str(exc))
        except MotionFormatError as exc:
            return self._error_response(request_id, exc.code, str(exc))
        except ValueError as exc:
            return self._error_response(request_id, "invalid_params", str(exc))
        except EngineError as exc:
            return self._error_response(request_id, "internal_error", str(exc))
        except Exception as exc:  # noqa: BLE001 - protocol must always answer
            log.exception("internal error in op %s", op)
            return self._error_response(request_id, "internal_error", f"{type(exc).__name__}: {exc}")

    # -- operations ------------------------------------------------------------

    def _execute(self, op: str, params: dict, seed: int) -> dict:
        engine = self.engine
        if op == "generate":
            prompt = params.get("prompt")
            if not isinstance(prompt, str) or not prompt.strip():
                raise RequestError("invalid_params", "generate needs a nonempty 'prompt'")
            if "duration_s" not in params:
                raise RequestError("invalid_params", "generate needs 'duration_s'")
            n = int(params.get("n", 3))
            records = engine.generate(prompt, float(params["duration_s"]), n=n, seed=seed)
            return {
                "ids": [r.id for r in records],
                "variants": [
                    {"id": r.id, "frames": r.motion.frame_count, "duration_s": r.motion.duration_s}
                    for r in records
                ],
            }
        if op == "edit":
            base_id = params.get("base_id")
            if not isinstance(base_id, str):
                raise RequestError("invalid_params", "edit needs a 'base_id'")
            command = parse_edit_command(params.get("edit"))
            record = engine.edit(base_id, command, seed=seed)
            return {"id": record.id, "frames": record.motion.frame_count,
                    "duration_s": record.motion.duration_s}
        if op == "import_pose":
            if "motion_json" not in params:
                raise RequestError("invalid_params", "import_pose needs 'motion_json'")
            record = engine.import_motion(params["motion_json"],
                                          source=str(params.get("source", "pose file")))
            return {"id": record.id, "frames": record.motion.frame_count,
                    "duration_s": record.motion.duration_s}
        if op == "list_gallery":
            return {"items": engine.store.list_gallery()}
        if op == "add_to_gallery":
            seq_id = params.get("id")
            if not isinstance(seq_id, str):
                raise RequestError("invalid_params", "add_to_gallery needs an 'id'")
            engine.store.add_to_gallery(seq_id)
            return {"id": seq_id, "in_gallery": True}
        if op == "get_sequence":
            seq_id = params.get("id")
            if not isinstance(seq_id, str):
                raise RequestError("invalid_params", "get_sequence needs an 'id'")
            record = engine.store.get(seq_id)
            return engine.record_summary(record, include_motion=bool(params.get("include_motion")))
        if op == "export":
            seq_id = params.get("id")
            fmt = params.get("format")
            if not isinstance(seq_id, str):
                raise RequestError("invalid_params", "export needs an 'id'")
            if fmt not in EXPORT_FORMATS:
                raise RequestError("invalid_params",
                                   f"unknown format {fmt!r}; valid: {', '.join(EXPORT_FORMATS)}")
            if fmt == "gltf":
                data = engine.export_gltf_bytes(seq_id)
                return {"format": "gltf", "filename": f"{seq_id}.gltf",
                        "gltf_base64": base64.b64encode(data).decode()}
            if fmt == "frames":
                every_k = int(params.get("every_k", 1))
                payload = engine.export_frames_payload(seq_id, every_k)
                payload["format"] = "frames"
                return payload
            return {"format": "motion-json", "filename": f"{seq_id}.motion.json",
                    "motion": engine.export_motion_json(seq_id)}
        raise RequestError("unknown_op", f"unknown op {op!r}")

    # -- responses ---------------------------------------------------------------

    @staticmethod
    def _encode(obj: dict) -> bytes:
        return json.dumps(obj, separators=(",", ":")).encode("utf-8") + b"\n"

    def _ok_response(self, request_id, payload) -> bytes:
        return self._encode({"request_id": request_id, "status": "ok", "payload": payload})

    def _error_response(self, request_id, code, message, byte_offset=None) -> bytes:
        payload = {"code": code, "message": message}
        if byte_offset is not None:
            payload["byte_offset"] = byte_offset
        return self._encode({"request_id": request_id, "status": "error", "payload": payload})

    @staticmethod
    def _send(writer: asyncio.StreamWriter, response: bytes) -> None:
        # a single write() of one complete line; the event loop never interleaves it
        if not writer.is_closing():
            writer.write(response)


def serve(engine: Engine, host: str = "127.0.0.1", port: int = DEFAULT_PORT, seed: int = 0) -> None:
    """Run the protocol server until SIGINT/SIGTERM."""
    async def _main():
        server = ProtocolServer(engine, host=host, port=port, seed=seed)
        stop = asyncio.Event()
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, stop.set)
        await server.serve_until(stop)

    asyncio.run(_main())

"""Batched tick ingestion over HTTP with an append-only JSONL log.

One POST /ticks carries a batch envelope:

    {"client_session_id": "<opaque>", "events": [<tick>, ...]}

Valid events are appended to the log in canonical form, invalid ones are
counted and skipped, and the ack reports both numbers. The write (all lines
of a batch joined into a single write) happens and is flushed before the ack
goes out, so an acked batch survives a process kill. A malformed envelope is
a protocol error: 400, nothing appended.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .model import SessionLog, ValidationError, tick_from_json_line, validate_tick

__all__ = [
    "DEFAULT_BATCH_LIMIT",
    "AppendLog",
    "IngestServer",
    "ProtocolError",
    "process_batch",
    "read_log",
]

DEFAULT_BATCH_LIMIT = 4000

log = logging.getLogger(__name__)


class ProtocolError(ValueError):
    """Envelope-level violation: reject the whole batch."""


class AppendLog:
    """Append-only JSONL sink; writes are lock-serialized and flushed."""

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._fh = open(path, "ab")

    def append_lines(self, lines: list[str]) -> None:
        if not lines:
            return
        payload = ("\n".join(lines) + "\n").encode("utf-8")
        with self._lock:
            self._fh.write(payload)
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            self._fh.close()


def process_batch(body: bytes, batch_limit: int = DEFAULT_BATCH_LIMIT):
    """Validate one envelope. Returns (canonical lines, ack dict).

    Raises ProtocolError when the envelope itself is malformed (bad JSON,
    missing fields, empty, or over the batch limit). Individual bad events
    only bump the rejected count.
    """
    try:
        envelope = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(f"body is not valid JSON: {exc}") from None
    if not isinstance(envelope, dict):
        raise ProtocolError("envelope must be a JSON object")
    session = envelope.get("client_session_id")
    if not isinstance(session, str) or not session:
        raise ProtocolError("client_session_id must be a non-empty string")
    events = envelope.get("events")
    if not isinstance(events, list):
        raise ProtocolError("events must be an array")
    if not events:
        raise ProtocolError("events must not be empty")
    if len(events) > batch_limit:
        raise ProtocolError(f"batch of {len(events)} exceeds limit {batch_limit}")

    lines: list[str] = []
    rejected = 0
    for raw in events:
        try:
            lines.append(validate_tick(raw).to_json_line())
        except ValidationError:
            rejected += 1
    return lines, {"accepted": len(lines), "rejected": rejected}


class IngestServer:
    """Threaded HTTP ingest endpoint around one AppendLog."""

    def __init__(
        self,
        log_path: str,
        host: str = "127.0.0.1",
        port: int = 0,
        batch_limit: int = DEFAULT_BATCH_LIMIT,
    ):
        self._log = AppendLog(log_path)
        self.batch_limit = batch_limit
        outer = self

        class Handler(BaseHTTPRequestHandler):
            # high-volume endpoint; per-request stderr lines would swamp it
            def log_message(self, fmt, *args):
                log.debug("ingest: " + fmt, *args)

            def _respond(self, status: int, payload: dict) -> None:
                body = json.dumps(payload, separators=(",", ":")).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                if self.path == "/healthz":
                    self._respond(200, {"status": "ok"})
                else:
                    self._respond(404, {"error": "not found"})

            def do_POST(self):
                if self.path != "/ticks":
                    self._respond(404, {"error": "not found"})
                    return
                try:
                    length = int(self.headers.get("Content-Length", ""))
                except ValueError:
                    self._respond(400, {"error": "missing Content-Length"})
                    return
                body = self.rfile.read(length)
                try:
                    lines, ack = process_batch(body, outer.batch_limit)
                except ProtocolError as exc:
                    self._respond(400, {"error": str(exc)})
                    return
                # durability before acknowledgement
                outer._log.append_lines(lines)
                self._respond(200, ack)

        class Server(ThreadingHTTPServer):
            # default backlog of 5 drops connections under concurrent load
            request_queue_size = 128

        self._httpd = Server((host, port), Handler)
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self._httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "IngestServer":
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="proxilog-ingest", daemon=True
        )
        self._thread.start()
        log.info("ingest server listening on %s", self.url)
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None
        self._log.close()

    def __enter__(self) -> "IngestServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def read_log(path: str) -> SessionLog:
    """Read a JSONL log back, skipping (and counting) unreadable lines."""
    events = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                events.append(tick_from_json_line(line))
            except ValidationError:
                skipped += 1
    if skipped:
        log.warning("read_log: skipped %d unreadable lines in %s", skipped, path)
    return SessionLog(events=events, skipped_lines=skipped)

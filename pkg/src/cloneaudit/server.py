"""HTTP+JSON service for the triage workflow.

Thin adapter over TriageStore using the stdlib threading server: one route
per store operation, JSON in and out, plus optional static serving of a
built UI directory. Status codes: 400 invalid body, 404 unknown pair or
path, 409 resolving a pair that has no open conflict.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, unquote, urlsplit

from .errors import ValidationError
from .triage import ClassificationRecord, TriageStore

log = logging.getLogger("cloneaudit.serve")


class TriageServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, store: TriageStore, ui_dir: Optional[str] = None):
        self.store = store
        self.ui_dir = os.path.abspath(ui_dir) if ui_dir else None
        super().__init__(address, TriageHandler)


class TriageHandler(BaseHTTPRequestHandler):
    server: TriageServer

    def log_message(self, fmt, *args):  # default handler spams stderr
        log.debug("%s - %s", self.address_string(), fmt % args)

    # ------------------------------------------------------------ plumbing

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def _read_body(self) -> Optional[dict]:
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b""
            payload = json.loads(raw.decode("utf-8")) if raw else {}
        except (ValueError, UnicodeDecodeError):
            self._error(400, "request body is not valid JSON")
            return None
        if not isinstance(payload, dict):
            self._error(400, "request body must be a JSON object")
            return None
        return payload

    def _record_from(self, body: dict, pair_id: str) -> Optional[ClassificationRecord]:
        timestamp = body.get("timestamp") or datetime.now(timezone.utc).isoformat(
            timespec="seconds"
        )
        try:
            return ClassificationRecord(
                pair_id=pair_id,
                reviewer_id=body["reviewer_id"],
                pattern=body["pattern"],
                boilerplate_kind=body.get("boilerplate_kind"),
                evidence_note=body.get("evidence_note", ""),
                evidence_url=body.get("evidence_url"),
                timestamp=timestamp,
            )
        except KeyError as exc:
            self._error(400, f"missing field {exc}")
            return None
        except ValidationError as exc:
            self._error(400, str(exc))
            return None

    # ------------------------------------------------------------ routes

    def do_GET(self) -> None:
        url = urlsplit(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        store = self.server.store
        if parts[:2] == ["api", "pairs"]:
            if len(parts) == 2:
                query = parse_qs(url.query)
                if query.get("status", [""])[0] == "unclassified":
                    reviewer = query.get("reviewer", [""])[0]
                    if not reviewer:
                        return self._error(400, "reviewer query parameter required")
                    bundle = store.next_unclassified(reviewer)
                    if bundle is None:
                        return self._send_json(200, {"queue_empty": True})
                    return self._send_json(200, bundle)
                return self._send_json(200, {"pairs": store.pair_ids()})
            pair_id = parts[2]
            pair = store.pair(pair_id)
            if pair is None:
                return self._error(404, f"unknown pair {pair_id!r}")
            return self._send_json(
                200,
                {
                    "pair": pair,
                    "bundle": store.bundle(pair_id),
                    "records": [r.to_json() for r in store.records_for(pair_id)],
                },
            )
        if parts == ["api", "conflicts"]:
            return self._send_json(200, {"conflicts": [c.to_json() for c in store.conflicts()]})
        if parts == ["api", "export"]:
            return self._send_json(200, store.export_classified())
        if self.server.ui_dir is not None and parts[:1] != ["api"]:
            return self._serve_static(url.path)
        self._error(404, "no such resource")

    def do_POST(self) -> None:
        url = urlsplit(self.path)
        parts = [unquote(p) for p in url.path.split("/") if p]
        store = self.server.store
        if len(parts) == 4 and parts[:2] == ["api", "pairs"] and parts[3] == "classification":
            pair_id = parts[2]
            if store.pair(pair_id) is None:
                return self._error(404, f"unknown pair {pair_id!r}")
            body = self._read_body()
            if body is None:
                return
            record = self._record_from(body, pair_id)
            if record is None:
                return
            stored = store.record_classification(record)
            return self._send_json(200, {"stored": stored.to_json()})
        if len(parts) == 4 and parts[:2] == ["api", "conflicts"] and parts[3] == "resolution":
            pair_id = parts[2]
            if store.pair(pair_id) is None:
                return self._error(404, f"unknown pair {pair_id!r}")
            body = self._read_body()
            if body is None:
                return
            record = self._record_from(body, pair_id)
            if record is None:
                return
            try:
                item = store.resolve_conflict(pair_id, record)
            except ValidationError as exc:
                return self._error(409, str(exc))
            return self._send_json(200, {"resolved": item.to_json()})
        self._error(404, "no such resource")

    # ------------------------------------------------------------ static UI

    def _serve_static(self, path: str) -> None:
        rel = unquote(path).lstrip("/") or "index.html"
        root = self.server.ui_dir
        full = os.path.normpath(os.path.join(root, rel))
        if os.path.isdir(full):
            full = os.path.join(full, "index.html")
        if not (full == root or full.startswith(root + os.sep)):
            return self._error(404, "no such resource")
        if not os.path.isfile(full):
            return self._error(404, "no such resource")
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as handle:
            data = handle.read()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(
    store: TriageStore,
    host: str = "127.0.0.1",
    port: int = 8765,
    ui_dir: Optional[str] = None,
) -> TriageServer:
    return TriageServer((host, port), store, ui_dir=ui_dir)


def serve(
    store_path: str,
    host: str = "127.0.0.1",
    port: int = 8765,
    ui_dir: Optional[str] = None,
) -> None:
    """Blocking entry point used by the CLI."""
    store = TriageStore.open(store_path)
    with store:
        server = make_server(store, host=host, port=port, ui_dir=ui_dir)
        log.info("serving triage API on http://%s:%d/", host, port)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()

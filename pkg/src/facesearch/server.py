"""HTTP/JSON session service driving interactive witness searches.

One session owns one search state. The protocol has three endpoints:

    POST /sessions                    create; returns the initial pool
    POST /sessions/{id}/selection     mark similar faces / declare the match
    GET  /sessions/{id}               status, counters, trace, current view

Each selection advances the underlying search by one iteration where the
accepted candidates are exactly the ones the witness marked (the local
acceptance level is implicit in the clicks); `final_id` declares
convergence. Requests with unknown fields are rejected; all bodies carry
`protocol_version: 1`.

Session state is held in memory under a per-session lock, with optional
JSON snapshots written on every mutation.
"""

from __future__ import annotations

import base64
import json
import mimetypes
import os
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import faceio, search

PROTOCOL_VERSION = 1

_CONFIG_KEYS = {
    "bandwidth": float,
    "zeta": float,
    "candidates_per_iter": int,
    "initial_pool_size": int,
    "max_iters": int,
}

AWAITING = "awaiting_selection"
CONVERGED = "converged"
EXHAUSTED = "exhausted"


class ProtocolError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class SessionRecord:
    session_id: str
    state: search.SearchState
    pending: list[search.Candidate]
    issued: dict[str, search.Candidate]
    status: str = AWAITING
    result_id: str | None = None
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _candidate_payload(cand: search.Candidate) -> dict:
    png = faceio.encode_image(cand.face, "png")
    return {"id": cand.id, "png_b64": base64.b64encode(png).decode("ascii")}


def _check_keys(body: dict, allowed: set[str], where: str):
    unknown = set(body) - allowed
    if unknown:
        raise ProtocolError(400, f"unknown fields in {where}: {sorted(unknown)}")
    version = body.get("protocol_version", PROTOCOL_VERSION)
    if version != PROTOCOL_VERSION:
        raise ProtocolError(400, f"unsupported protocol_version {version!r}")


class SessionService:
    """In-memory session store over one dataset and one model pair."""

    def __init__(self, dataset, eig, mvn, snapshot_dir: str | None = None):
        self.dataset = dataset
        self.eig = eig
        self.mvn = mvn
        self.snapshot_dir = snapshot_dir
        self._sessions: dict[str, SessionRecord] = {}
        self._lock = threading.Lock()
        if snapshot_dir:
            os.makedirs(snapshot_dir, exist_ok=True)

    # -- protocol operations -------------------------------------------------

    def create_session(self, body: dict) -> dict:
        _check_keys(body, {"protocol_version", "seed", "config"}, "create-session")
        seed = body.get("seed")
        if seed is None:
            seed = int.from_bytes(os.urandom(8), "little") >> 1
        elif not isinstance(seed, int) or isinstance(seed, bool):
            raise ProtocolError(400, "seed must be an integer")
        overrides = body.get("config", {})
        if not isinstance(overrides, dict):
            raise ProtocolError(400, "config must be an object")
        _check_keys(overrides, set(_CONFIG_KEYS) | {"protocol_version"}, "config")
        config = search.SearchConfig()
        for key, conv in _CONFIG_KEYS.items():
            if key in overrides:
                try:
                    setattr(config, key, conv(overrides[key]))
                except (TypeError, ValueError):
                    raise ProtocolError(400, f"config.{key} must be {conv.__name__}")

        state = search.SearchState(
            dataset=self.dataset,
            eig=self.eig,
            mvn=self.mvn,
            config=config,
            seed=seed,
        )
        try:
            pool = search.draw_initial_pool(state)
        except ValueError as exc:
            raise ProtocolError(400, str(exc))
        record = SessionRecord(
            session_id=uuid.uuid4().hex,
            state=state,
            pending=pool,
            issued={c.id: c for c in pool},
        )
        with self._lock:
            self._sessions[record.session_id] = record
        self._snapshot(record)
        return {
            "protocol_version": PROTOCOL_VERSION,
            "session_id": record.session_id,
            "status": record.status,
            "candidates": [_candidate_payload(c) for c in record.pending],
        }

    def _get(self, session_id: str) -> SessionRecord:
        with self._lock:
            record = self._sessions.get(session_id)
        if record is None:
            raise ProtocolError(404, f"unknown session {session_id!r}")
        return record

    def submit_selection(self, session_id: str, body: dict) -> dict:
        _check_keys(
            body, {"protocol_version", "accepted_ids", "final_id"}, "selection"
        )
        if "accepted_ids" not in body:
            raise ProtocolError(400, "selection requires accepted_ids")
        accepted_ids = body["accepted_ids"]
        if not isinstance(accepted_ids, list) or not all(
            isinstance(x, str) for x in accepted_ids
        ):
            raise ProtocolError(400, "accepted_ids must be a list of strings")
        final_id = body.get("final_id")
        if final_id is not None and not isinstance(final_id, str):
            raise ProtocolError(400, "final_id must be a string")

        record = self._get(session_id)
        with record.lock:
            if record.status != AWAITING:
                raise ProtocolError(409, f"session is {record.status}")
            state = record.state
            pending_ids = {c.id for c in record.pending}
            stale = [x for x in accepted_ids if x not in pending_ids]
            if stale:
                raise ProtocolError(
                    409, f"stale or unknown candidate ids: {sorted(stale)}"
                )
            if final_id is not None and final_id not in record.issued:
                raise ProtocolError(409, f"final_id {final_id!r} was never issued")

            initial_phase = state.t == 0 and not state.accepted
            if initial_phase:
                search.apply_initial_selection(state, record.pending, accepted_ids)
            else:
                search.apply_selection(state, record.pending, accepted_ids)

            response: dict = {"protocol_version": PROTOCOL_VERSION}
            if final_id is not None:
                record.status = CONVERGED
                record.result_id = final_id
                record.pending = []
                response["result"] = dict(
                    _candidate_payload(record.issued[final_id]),
                    iterations=state.t,
                )
            elif not state.accepted:
                # witness rejected the whole initial pool: deal a fresh one
                record.pending = search.draw_initial_pool(state)
                record.issued.update({c.id: c for c in record.pending})
            elif state.t >= state.config.max_iters:
                record.status = EXHAUSTED
                record.pending = []
            else:
                record.pending = search.propose_candidates(state)
                record.issued.update({c.id: c for c in record.pending})
            record.updated = time.time()
            response["status"] = record.status
            if record.status == AWAITING:
                response["candidates"] = [
                    _candidate_payload(c) for c in record.pending
                ]
            self._snapshot(record)
            return response

    def get_session(self, session_id: str) -> dict:
        record = self._get(session_id)
        with record.lock:
            state = record.state
            trace = []
            if state.initial is not None:
                trace.append({"t": 0, "accepted_count": state.initial.accepted_count})
            trace.extend(
                {"t": e.t, "accepted_count": e.accepted_count} for e in state.trace
            )
            out = {
                "protocol_version": PROTOCOL_VERSION,
                "status": record.status,
                "t": state.t,
                "accepted_count": len(state.accepted),
                "trace": trace,
                # beyond the minimal schema so a reload can rebuild the view
                "candidates": [_candidate_payload(c) for c in record.pending],
                "accepted": [
                    _candidate_payload(record.issued[a.id]) for a in state.accepted
                ],
            }
            if record.status == CONVERGED and record.result_id is not None:
                out["result"] = dict(
                    _candidate_payload(record.issued[record.result_id]),
                    iterations=state.t,
                )
            return out

    # -- durability -----------------------------------------------------------

    def _snapshot(self, record: SessionRecord):
        if not self.snapshot_dir:
            return
        state = record.state
        doc = {
            "session_id": record.session_id,
            "status": record.status,
            "seed": state.seed,
            "draw_count": state.draw_count,
            "t": state.t,
            "accepted": [
                {"id": a.id, "z": a.z.tolist(), "loss": a.loss}
                for a in state.accepted
            ],
            "pending_ids": [c.id for c in record.pending],
            "config": {k: getattr(state.config, k) for k in _CONFIG_KEYS},
            "created": record.created,
            "updated": record.updated,
        }
        path = os.path.join(self.snapshot_dir, f"{record.session_id}.json")
        with open(path, "w") as fh:
            json.dump(doc, fh)


# ---------------------------------------------------------------------------
# HTTP layer

_SESSION_RE = re.compile(r"^/sessions/([0-9a-f]+)$")
_SELECTION_RE = re.compile(r"^/sessions/([0-9a-f]+)/selection$")


def _make_handler(service: SessionService, ui_dir: str | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # keep tests quiet
            pass

        def _send(self, code: int, payload: dict):
            body = json.dumps(payload).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _error(self, code: int, message: str):
            self._send(
                code, {"protocol_version": PROTOCOL_VERSION, "error": message}
            )

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return {}
            try:
                body = json.loads(raw)
            except json.JSONDecodeError:
                raise ProtocolError(400, "request body is not valid JSON")
            if not isinstance(body, dict):
                raise ProtocolError(400, "request body must be a JSON object")
            return body

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_POST(self):
            try:
                if self.path == "/sessions":
                    self._send(200, service.create_session(self._body()))
                    return
                m = _SELECTION_RE.match(self.path)
                if m:
                    self._send(
                        200, service.submit_selection(m.group(1), self._body())
                    )
                    return
                self._error(404, f"no such endpoint: POST {self.path}")
            except ProtocolError as exc:
                self._error(exc.code, exc.message)

        def do_GET(self):
            try:
                m = _SESSION_RE.match(self.path)
                if m:
                    self._send(200, service.get_session(m.group(1)))
                    return
                if ui_dir:
                    self._serve_static()
                    return
                self._error(404, f"no such endpoint: GET {self.path}")
            except ProtocolError as exc:
                self._error(exc.code, exc.message)

        def _serve_static(self):
            rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
            path = os.path.realpath(os.path.join(ui_dir, rel))
            if not path.startswith(os.path.realpath(ui_dir)) or not os.path.isfile(
                path
            ):
                self._error(404, f"no such file: {rel}")
                return
            ctype = mimetypes.guess_type(path)[0] or "application/octet-stream"
            with open(path, "rb") as fh:
                data = fh.read()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

    return Handler


def build_server(
    service: SessionService, host: str = "127.0.0.1", port: int = 0,
    ui_dir: str | None = None,
) -> ThreadingHTTPServer:
    """Create (but do not start) the HTTP server; port 0 picks a free port."""
    handler = _make_handler(service, ui_dir)
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve_forever(service, host, port, ui_dir=None):
    server = build_server(service, host, port, ui_dir)
    print(f"session service listening on http://{server.server_address[0]}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()

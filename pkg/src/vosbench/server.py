"""HTTP wire service for the interactive track.

Stdlib-only JSON-over-HTTP front end for the session engine.  Scores travel
as unit-interval doubles except the final trajectory, which is reported as
percentages with one decimal (the headline report format).  Every request is
logged as one JSON object per line on standard error.

Routes::

    GET  /health                      -> {"status": "ok"}
    POST /session                     -> open a session, returns round-0 scribbles
    POST /session/<id>/masks          -> submit RLE-encoded masks for one round

Error statuses: 400 malformed payload, 404 unknown sequence/session/route,
409 concurrent submission to one session, 410 session already closed (the
final report rides along), 413 oversized body, 422 submission that cannot be
aligned with the sequence (the round is not consumed).
"""

from __future__ import annotations

import json
import re
import sys
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import (
    AlignmentError,
    MaskFormatError,
    ScribbleStoreError,
    SessionClosedError,
    SessionConflictError,
    SessionNotFoundError,
    VosbenchError,
)
from .masks import MultiObjectMask
from .reports import round_half_away
from .robot import FinalResponse, InteractiveService, RoundResponse, Scribble
from .wire import rle_decode

MAX_BODY_BYTES = 256 * 1024 * 1024
_MASKS_ROUTE = re.compile(r"^/session/([A-Za-z0-9_-]+)/masks$")


class _HttpError(Exception):
    def __init__(self, status: int, message: str, extra: dict | None = None):
        super().__init__(message)
        self.status = status
        self.payload = {"error": message}
        if extra:
            self.payload.update(extra)


def scribbles_payload(scribbles: list[Scribble]) -> list[dict]:
    return [s.to_dict() for s in scribbles]


def final_payload(final: FinalResponse) -> dict:
    payload = {
        "final": True,
        "state": final.state,
        "rounds_completed": final.rounds_completed,
        "trajectory": [round_half_away(100.0 * t, 1) for t in final.trajectory],
    }
    if final.per_frame_jf is not None:
        payload["per_frame_jf"] = list(final.per_frame_jf)
    return payload


def round_payload(response: RoundResponse) -> dict:
    return {
        "round": response.round,
        "per_frame_jf": list(response.per_frame_jf),
        "target_frame": response.target_frame,
        "scribbles": scribbles_payload(response.scribbles),
    }


def _decode_frames(frames_raw) -> list[MultiObjectMask]:
    if not isinstance(frames_raw, list) or not frames_raw:
        raise _HttpError(400, "'frames' must be a non-empty list")
    entries = []
    for entry in frames_raw:
        if not isinstance(entry, dict):
            raise _HttpError(400, "each frame must be an object")
        try:
            index = int(entry["index"])
            width = int(entry["width"])
            height = int(entry["height"])
            rle = entry["rle"]
        except (KeyError, TypeError, ValueError) as exc:
            raise _HttpError(400, f"malformed frame entry: {exc!r}") from exc
        if width < 1 or height < 1:
            raise _HttpError(400, f"frame {index}: non-positive dimensions")
        if not isinstance(rle, list):
            raise _HttpError(400, f"frame {index}: 'rle' must be a list")
        try:
            labels = rle_decode([int(v) for v in rle], width, height)
        except (MaskFormatError, TypeError, ValueError) as exc:
            raise _HttpError(400, f"frame {index}: {exc}") from exc
        entries.append((index, MultiObjectMask(labels)))
    entries.sort(key=lambda e: e[0])
    indices = [e[0] for e in entries]
    if indices != list(range(len(entries))):
        raise _HttpError(400, f"frame indices must cover 0..n-1 exactly, got {indices}")
    return [mask for _, mask in entries]


def _decode_candidates(raw) -> list[int] | None:
    if raw is None:
        return None
    if not isinstance(raw, list):
        raise _HttpError(400, "'candidate_frames' must be a list of frame indices")
    try:
        return [int(v) for v in raw]
    except (TypeError, ValueError) as exc:
        raise _HttpError(400, f"malformed candidate frame: {exc!r}") from exc


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "vosbench"
    log_stream = sys.stderr

    @property
    def service(self) -> InteractiveService:
        return self.server.service  # type: ignore[attr-defined]

    # -- plumbing ----------------------------------------------------------

    def log_request(self, code="-", size="-"):  # explicit JSON logging instead
        pass

    def log_message(self, format, *args):
        self._emit({"event": "http", "message": format % args})

    def _emit(self, record: dict) -> None:
        print(json.dumps(record), file=self.log_stream, flush=True)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        if status != 200:
            self.close_connection = True
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        if self.close_connection:
            self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(body)
        self._emit(
            {
                "ts": round(time.time(), 3),
                "method": self.command,
                "path": self.path,
                "status": status,
                "ms": round((time.monotonic() - self._t0) * 1000.0, 1),
            }
        )

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            raise _HttpError(413, f"body exceeds {MAX_BODY_BYTES} bytes")
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise _HttpError(400, f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise _HttpError(400, "body must be a JSON object")
        return data

    # -- routes ------------------------------------------------------------

    def do_GET(self):
        self._t0 = time.monotonic()
        if self.path == "/health":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": f"no route GET {self.path}"})

    def do_POST(self):
        self._t0 = time.monotonic()
        try:
            data = self._read_json()
            if self.path == "/session":
                self._start_session(data)
                return
            match = _MASKS_ROUTE.match(self.path)
            if match:
                self._submit_masks(match.group(1), data)
                return
            raise _HttpError(404, f"no route POST {self.path}")
        except _HttpError as exc:
            self._send(exc.status, exc.payload)
        except VosbenchError as exc:
            self._send(500, {"error": str(exc)})
        except Exception as exc:  # pragma: no cover - last-resort guard
            self._emit({"event": "error", "detail": repr(exc)})
            self._send(500, {"error": "internal server error"})

    def _start_session(self, data: dict) -> None:
        sequence = data.get("sequence")
        if not isinstance(sequence, str) or not sequence:
            raise _HttpError(400, "body must carry a 'sequence' name")
        try:
            session_id, scribbles, meta = self.service.start_session(sequence)
        except (SessionNotFoundError, ScribbleStoreError) as exc:
            raise _HttpError(404, str(exc)) from exc
        payload = {"session_id": session_id, "round": 0, **meta}
        payload["scribbles"] = scribbles_payload(scribbles)
        self._send(200, payload)

    def _submit_masks(self, session_id: str, data: dict) -> None:
        frames = _decode_frames(data.get("frames"))
        candidates = _decode_candidates(data.get("candidate_frames"))
        try:
            response = self.service.submit_masks(session_id, frames, candidates)
        except SessionNotFoundError as exc:
            raise _HttpError(404, str(exc)) from exc
        except SessionConflictError as exc:
            raise _HttpError(409, str(exc)) from exc
        except SessionClosedError as exc:
            final = self.service.final_summary(session_id)
            raise _HttpError(410, str(exc), final_payload(final)) from exc
        except AlignmentError as exc:
            raise _HttpError(422, str(exc)) from exc
        if isinstance(response, FinalResponse):
            self._send(200, final_payload(response))
        else:
            self._send(200, round_payload(response))


class InteractiveHTTPServer(ThreadingHTTPServer):
    """Threading JSON server bound to one session engine."""

    daemon_threads = True

    def __init__(self, address: tuple[str, int], service: InteractiveService):
        super().__init__(address, _Handler)
        self.service = service


def make_server(
    service: InteractiveService, host: str = "127.0.0.1", port: int = 0
) -> InteractiveHTTPServer:
    """Bind the wire service; port 0 picks a free port (see ``server_port``)."""
    return InteractiveHTTPServer((host, port), service)

"""Session lifecycle for the interactive evaluation service.

Synchronous, one in-flight request per session: ``connect`` opens a session
and decodes the round-0 scribbles, ``submit`` sends one full set of per-frame
masks and returns either the next round's scribbles or the final report.
The client never mutates the masks it is given — submissions are pure
serializations of the caller's arrays.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import requests

from .rle import encode

DEFAULT_TIMEOUT = 30.0
SECONDS_PER_OBJECT = 30.0


class ClientError(Exception):
    """Base class for everything this package raises."""


class ServiceError(ClientError):
    """Non-success HTTP status from the service."""

    def __init__(self, status: int, message: str, payload: dict | None = None):
        super().__init__(f"HTTP {status}: {message}")
        self.status = status
        self.payload = payload or {}


class SubmissionRejected(ServiceError):
    """The submission could not be aligned with the sequence (no round spent)."""


class SessionClosed(ClientError):
    """The session has reached a terminal state; submitting again is futile."""

    def __init__(self, final: "FinalReply | None"):
        state = final.state if final else "closed"
        super().__init__(f"session is {state}; no further rounds accepted")
        self.final = final


@dataclass(frozen=True)
class Scribble:
    """One corrective annotation: polyline strokes on a single frame."""

    frame: int
    object_id: int
    kind: str  # "foreground" (missed region) or "background" (hallucination)
    paths: tuple[tuple[tuple[float, float], ...], ...]

    @classmethod
    def from_wire(cls, data: dict) -> "Scribble":
        paths = tuple(
            tuple((float(x), float(y)) for x, y in path) for path in data["paths"]
        )
        return cls(
            frame=int(data["frame"]),
            object_id=int(data["object_id"]),
            kind=str(data["kind"]),
            paths=paths,
        )

    def points(self) -> list[tuple[float, float]]:
        return [point for path in self.paths for point in path]


@dataclass(frozen=True)
class RoundReply:
    """Scores for the submitted round plus the next corrective scribbles."""

    round: int
    per_frame_jf: tuple[float, ...]
    target_frame: int
    scribbles: tuple[Scribble, ...]


@dataclass(frozen=True)
class FinalReply:
    """Terminal report: how the session ended and the per-round trajectory."""

    state: str  # "EXHAUSTED" or "EXPIRED"
    rounds_completed: int
    trajectory: tuple[float, ...]  # percent, one decimal, as reported
    per_frame_jf: tuple[float, ...] | None = None


@dataclass
class ClientSession:
    """One open evaluation session; use one instance per sequence attempt."""

    endpoint: str
    session_id: str
    sequence: str
    round: int
    object_count: int
    frame_count: int
    width: int
    height: int
    budget_seconds: float | None
    last_scribbles: tuple[Scribble, ...]
    opened_at: float = field(default_factory=time.monotonic)
    final: FinalReply | None = None

    @property
    def closed(self) -> bool:
        return self.final is not None

    def seconds_remaining(self) -> float | None:
        """Wall-clock budget left, or None when the service is untimed."""
        if self.budget_seconds is None:
            return None
        return max(0.0, self.budget_seconds - (time.monotonic() - self.opened_at))

    def deadline_hint(self) -> float | None:
        """Conservative per-session time estimate, capped at 30 s per object."""
        remaining = self.seconds_remaining()
        if remaining is None:
            return None
        return min(remaining, SECONDS_PER_OBJECT * self.object_count)

    def scribble_points(self) -> dict[int, list[tuple[float, float]]]:
        """The latest scribbles flattened to per-object point lists."""
        points: dict[int, list[tuple[float, float]]] = {}
        for scribble in self.last_scribbles:
            points.setdefault(scribble.object_id, []).extend(scribble.points())
        return points


def _post(url: str, payload: dict, timeout: float) -> dict:
    try:
        response = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise ClientError(f"request to {url} failed: {exc}") from exc
    try:
        body = response.json()
    except ValueError:
        body = {}
    if response.status_code != 200:
        message = body.get("error", response.reason or "request failed")
        if response.status_code == 422:
            raise SubmissionRejected(response.status_code, message, body)
        if response.status_code == 410 and body.get("final"):
            raise SessionClosed(_parse_final(body))
        raise ServiceError(response.status_code, message, body)
    return body


def _parse_final(body: dict) -> FinalReply:
    per_frame = body.get("per_frame_jf")
    return FinalReply(
        state=str(body["state"]),
        rounds_completed=int(body["rounds_completed"]),
        trajectory=tuple(float(v) for v in body["trajectory"]),
        per_frame_jf=None if per_frame is None else tuple(float(v) for v in per_frame),
    )


def connect(endpoint: str, sequence: str, timeout: float = DEFAULT_TIMEOUT) -> ClientSession:
    """Open a session and decode the initial scribbles."""
    endpoint = endpoint.rstrip("/")
    body = _post(f"{endpoint}/session", {"sequence": sequence}, timeout)
    scribbles = tuple(Scribble.from_wire(s) for s in body["scribbles"])
    budget = body.get("budget_seconds")
    return ClientSession(
        endpoint=endpoint,
        session_id=str(body["session_id"]),
        sequence=sequence,
        round=int(body["round"]),
        object_count=int(body["object_count"]),
        frame_count=int(body["frame_count"]),
        width=int(body["width"]),
        height=int(body["height"]),
        budget_seconds=None if budget is None else float(budget),
        last_scribbles=scribbles,
    )


def submit(
    session: ClientSession,
    masks: list[np.ndarray],
    candidate_frames: list[int] | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> RoundReply | FinalReply:
    """Send one full set of per-frame label grids; advance or finish.

    Returns the next round's scribbles, or the final report once the session
    ends (8 rounds spent, or the budget expired).  A terminal state is final:
    submitting a closed session raises ``SessionClosed`` without a request.
    """
    if session.closed:
        raise SessionClosed(session.final)
    frames = [
        {
            "index": i,
            "rle": encode(grid),
            "width": int(np.asarray(grid).shape[1]),
            "height": int(np.asarray(grid).shape[0]),
        }
        for i, grid in enumerate(masks)
    ]
    payload: dict = {"frames": frames}
    if candidate_frames is not None:
        payload["candidate_frames"] = [int(f) for f in candidate_frames]
    url = f"{session.endpoint}/session/{session.session_id}/masks"
    try:
        body = _post(url, payload, timeout)
    except SessionClosed as exc:
        session.final = exc.final
        raise
    if body.get("final"):
        session.final = _parse_final(body)
        session.round = session.final.rounds_completed
        session.last_scribbles = ()
        return session.final
    reply = RoundReply(
        round=int(body["round"]),
        per_frame_jf=tuple(float(v) for v in body["per_frame_jf"]),
        target_frame=int(body["target_frame"]),
        scribbles=tuple(Scribble.from_wire(s) for s in body["scribbles"]),
    )
    session.round = reply.round
    session.last_scribbles = reply.scribbles
    return reply

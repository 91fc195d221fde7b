"""Interactive-track session engine and scribble synthesis.

A session hands out human-plausible correction scribbles: the robot finds
the largest connected error region of an object, skeletonizes it, and
returns the longest skeleton path as a polyline in normalized coordinates.
Sessions run for at most 8 scored interactions under a per-round time budget
of 30 seconds per object.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage.morphology import skeletonize

from .errors import (
    AlignmentError,
    ScribbleStoreError,
    SessionClosedError,
    SessionConflictError,
    SessionNotFoundError,
    VosbenchError,
)
from .masks import DatasetIndex, MaskSequence, MultiObjectMask, load_sequence
from .metrics import boundary_f, jaccard

MAX_ROUNDS = 8
SECONDS_PER_OBJECT = 30.0
BUDGET_SCALE_ENV = "VOSBENCH_SESSION_BUDGET_SCALE"
MAX_STROKE_POINTS = 50

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class Scribble:
    """Polyline strokes for one object on one frame, in unit-square coords."""

    frame: int
    object_id: int
    paths: list[list[tuple[float, float]]]
    kind: str = "foreground"

    def __post_init__(self):
        if self.kind not in ("foreground", "background"):
            raise ValueError(f"kind must be foreground or background, got {self.kind!r}")
        for path in self.paths:
            if len(path) < 2:
                raise ValueError("every stroke needs at least 2 points")
            for x, y in path:
                if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                    raise ValueError(f"point ({x}, {y}) outside the unit square")

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "object_id": self.object_id,
            "paths": [[[x, y] for x, y in path] for path in self.paths],
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scribble":
        return cls(
            frame=int(data["frame"]),
            object_id=int(data["object_id"]),
            paths=[[(float(x), float(y)) for x, y in path] for path in data["paths"]],
            kind=data.get("kind", "foreground"),
        )


def normalize_point(row: int, col: int, height: int, width: int) -> tuple[float, float]:
    """Pixel center -> unit square; `rasterize_point` inverts it exactly."""
    return ((col + 0.5) / width, (row + 0.5) / height)


def rasterize_point(x: float, y: float, height: int, width: int) -> tuple[int, int]:
    col = min(int(x * width), width - 1)
    row = min(int(y * height), height - 1)
    return row, col


def _largest_component(region: np.ndarray) -> np.ndarray | None:
    labeled, count = ndimage.label(region, structure=_FOUR_CONN)
    if count == 0:
        return None
    sizes = np.bincount(labeled.ravel())
    sizes[0] = 0
    return labeled == int(np.argmax(sizes))


def _longest_skeleton_path(skeleton: np.ndarray) -> list[tuple[int, int]]:
    """Approximate longest path through the skeleton via double BFS.

    Deterministic: starts from the lexicographically smallest pixel and
    breaks distance ties the same way.
    """
    pixels = [tuple(p) for p in np.argwhere(skeleton)]
    if not pixels:
        return []
    pixel_set = set(pixels)

    def neighbors(p):
        r, c = p
        out = []
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                q = (r + dr, c + dc)
                if q in pixel_set:
                    out.append(q)
        return out

    def bfs(start):
        dist = {start: 0}
        parent = {start: None}
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in sorted(neighbors(p)):
                if q not in dist:
                    dist[q] = dist[p] + 1
                    parent[q] = p
                    queue.append(q)
        # tie-break: maximal distance, then lexicographically smallest pixel
        best = max(dist.values())
        far = min(p for p, d in dist.items() if d == best)
        return far, parent

    start = min(pixels)
    end_a, _ = bfs(start)
    end_b, parent = bfs(end_a)
    path = []
    node = end_b
    while node is not None:
        path.append(node)
        node = parent[node]
    return path


def _subsample(path: list, cap: int = MAX_STROKE_POINTS) -> list:
    if len(path) <= cap:
        return path
    idx = np.round(np.linspace(0, len(path) - 1, cap)).astype(int)
    return [path[i] for i in sorted(set(idx.tolist()))]


def robot_scribble(
    pred: MultiObjectMask, gt: MultiObjectMask, object_id: int
) -> Scribble:
    """Scribble inside the object's worst error region.

    False negatives (missed object pixels) take priority; when the object is
    fully covered, the largest false-positive blob gets a background
    correction.  Every returned point rasterizes into the error region it
    corrects; a perfect prediction yields a scribble with no strokes.
    """
    if pred.labels.shape != gt.labels.shape:
        raise AlignmentError(
            f"prediction {pred.labels.shape} vs ground truth {gt.labels.shape}"
        )
    gt_bin = gt.binary(object_id)
    pred_bin = pred.binary(object_id)
    false_neg = gt_bin & ~pred_bin
    false_pos = pred_bin & ~gt_bin
    if false_neg.any():
        region, kind = false_neg, "foreground"
    elif false_pos.any():
        region, kind = false_pos, "background"
    else:
        return Scribble(frame=0, object_id=object_id, paths=[], kind="foreground")

    component = _largest_component(region)
    height, width = gt.labels.shape
    skeleton = skeletonize(component)
    path = _longest_skeleton_path(skeleton)
    if not path:
        # Degenerate thin regions: fall back to the component pixel farthest
        # from its boundary (deterministic on ties).
        dist = ndimage.distance_transform_edt(component)
        best = np.unravel_index(int(np.argmax(dist)), dist.shape)
        path = [tuple(int(v) for v in best)]

    # Pull endpoints one pixel off the component boundary when that leaves a
    # usable stroke; every point stays inside the component either way.
    eroded = ndimage.binary_erosion(component, structure=_FOUR_CONN, border_value=0)
    trimmed = list(path)
    while trimmed and not eroded[trimmed[0]]:
        trimmed.pop(0)
    while trimmed and not eroded[trimmed[-1]]:
        trimmed.pop()
    if len(trimmed) >= 2:
        path = trimmed
    path = _subsample(path)

    if len(path) == 1:
        (r, c) = path[0]
        points = [
            ((c + 0.35) / width, (r + 0.35) / height),
            ((c + 0.65) / width, (r + 0.65) / height),
        ]
    else:
        points = [normalize_point(r, c, height, width) for r, c in path]
    return Scribble(frame=0, object_id=object_id, paths=[points], kind=kind)


def load_initial_scribbles(path: str | Path) -> list[Scribble]:
    """Read a sequence's authored round-0 scribble file."""
    path = Path(path)
    if not path.is_file():
        raise ScribbleStoreError(f"no initial scribble file: {path}")
    try:
        data = json.loads(path.read_text())
        return [Scribble.from_dict(d) for d in data["scribbles"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScribbleStoreError(f"malformed scribble file {path}: {exc}") from exc


@dataclass
class RoundRecord:
    per_frame_jf: list[float]
    target_frame: int
    scribbles: list[Scribble]
    elapsed: float


@dataclass
class RoundResponse:
    round: int
    per_frame_jf: list[float]
    target_frame: int
    scribbles: list[Scribble]


@dataclass
class FinalResponse:
    state: str  # EXHAUSTED or EXPIRED
    rounds_completed: int
    trajectory: list[float]
    per_frame_jf: list[float] | None = None


@dataclass
class _Session:
    session_id: str
    sequence: str
    gt: MaskSequence
    budget: float | None
    round: int = 0
    state: str = "OPEN"
    last_response_at: float = 0.0
    history: list[RoundRecord] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def object_count(self) -> int:
        return len(self.gt.id_set)


def default_budget_scale() -> float:
    raw = os.environ.get(BUDGET_SCALE_ENV)
    if raw is None:
        return 1.0
    return float(raw)


class InteractiveService:
    """State machine behind the interactive evaluation service.

    The clock is injectable so tests can drive budget expiry without real
    waiting; a budget scale of 0 disables budgets entirely (frozen clock).
    """

    def __init__(
        self,
        index: DatasetIndex,
        budget_scale: float | None = None,
        clock=time.monotonic,
        id_factory=lambda: uuid.uuid4().hex,
    ):
        self.index = index
        self.budget_scale = (
            default_budget_scale() if budget_scale is None else float(budget_scale)
        )
        self.clock = clock
        self.id_factory = id_factory
        self._sessions: dict[str, _Session] = {}
        self._gt_cache: dict[str, MaskSequence] = {}
        self._store_lock = threading.Lock()

    def _ground_truth(self, sequence: str) -> MaskSequence:
        with self._store_lock:
            cached = self._gt_cache.get(sequence)
        if cached is not None:
            return cached
        gt = load_sequence(self.index, sequence, "ground-truth")
        with self._store_lock:
            self._gt_cache[sequence] = gt
        return gt

    def start_session(self, sequence: str) -> tuple[str, list[Scribble], dict]:
        """Open a session and return its authored round-0 scribbles."""
        if sequence not in self.index.sequence_names():
            raise SessionNotFoundError(f"unknown sequence '{sequence}'")
        scribbles = load_initial_scribbles(self.index.scribble_file(sequence))
        gt = self._ground_truth(sequence)
        session = _Session(
            session_id=self.id_factory(),
            sequence=sequence,
            gt=gt,
            budget=self._round_budget(len(gt.id_set)),
        )
        session.last_response_at = self.clock()
        with self._store_lock:
            self._sessions[session.session_id] = session
        meta = {
            "object_count": session.object_count,
            "budget_seconds": session.budget,
            "frame_count": len(gt),
            "width": gt.width,
            "height": gt.height,
        }
        return session.session_id, scribbles, meta

    def _round_budget(self, object_count: int) -> float | None:
        if self.budget_scale <= 0:
            return None
        return SECONDS_PER_OBJECT * object_count * self.budget_scale

    def _session(self, session_id: str) -> _Session:
        with self._store_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFoundError(f"unknown session '{session_id}'")
        return session

    def _score_frames(self, gt: MaskSequence, frames: list[MultiObjectMask]) -> list[float]:
        """Per-frame mean over objects of the frame-wise J&F."""
        ids = gt.object_ids()
        scores = []
        for fi in range(len(gt)):
            gt_frame = gt.frames[fi]
            pred_frame = frames[fi]
            total = 0.0
            for oid in ids:
                pred_bin = pred_frame.binary(oid)
                gt_bin = gt_frame.binary(oid)
                total += (
                    jaccard(pred_bin, gt_bin, gt_frame.ignore)
                    + boundary_f(pred_bin, gt_bin, ignore=gt_frame.ignore)
                ) / 2.0
            scores.append(total / len(ids))
        return scores

    def _check_alignment(self, gt: MaskSequence, frames: list[MultiObjectMask]):
        if len(frames) != len(gt):
            raise AlignmentError(
                f"submission has {len(frames)} frames, sequence has {len(gt)}"
            )
        for i, frame in enumerate(frames):
            if (frame.height, frame.width) != (gt.height, gt.width):
                raise AlignmentError(
                    f"frame {i} is {frame.width}x{frame.height}, "
                    f"sequence is {gt.width}x{gt.height}"
                )

    def _trajectory(self, session: _Session) -> list[float]:
        return [float(np.mean(rec.per_frame_jf)) for rec in session.history]

    def submit_masks(
        self,
        session_id: str,
        frames: list[MultiObjectMask],
        candidate_frames: list[int] | None = None,
    ) -> RoundResponse | FinalResponse:
        """Score a submission; answer with scribbles or the final trajectory.

        Alignment failures reject the submission without consuming a round or
        resetting the round clock.  A submission past the budget freezes the
        session at the completed rounds.
        """
        session = self._session(session_id)
        if not session.lock.acquire(blocking=False):
            raise SessionConflictError(
                f"session '{session_id}' is already processing a submission"
            )
        try:
            return self._submit_locked(session, frames, candidate_frames)
        finally:
            session.lock.release()

    def _submit_locked(self, session, frames, candidate_frames):
        now = self.clock()
        if session.state != "OPEN":
            raise SessionClosedError(
                f"session '{session.session_id}' is {session.state}"
            )
        elapsed = now - session.last_response_at
        if session.budget is not None and elapsed > session.budget:
            session.state = "EXPIRED"
            return FinalResponse(
                state="EXPIRED",
                rounds_completed=session.round,
                trajectory=self._trajectory(session),
            )
        gt = session.gt
        self._check_alignment(gt, frames)
        if candidate_frames:
            eligible = sorted(set(int(f) for f in candidate_frames))
            bad = [f for f in eligible if not (0 <= f < len(gt))]
            if bad:
                raise AlignmentError(f"candidate frames out of range: {bad}")
        else:
            eligible = list(range(len(gt)))

        per_frame = self._score_frames(gt, frames)
        target = min(eligible, key=lambda f: (per_frame[f], f))
        scribbles = []
        for oid in gt.object_ids():
            scribble = robot_scribble(frames[target], gt.frames[target], oid)
            if scribble.paths:
                scribble.frame = target
                scribbles.append(scribble)
        session.round += 1
        session.history.append(
            RoundRecord(per_frame, target, scribbles, elapsed)
        )
        if session.round >= MAX_ROUNDS:
            session.state = "EXHAUSTED"
            response = FinalResponse(
                state="EXHAUSTED",
                rounds_completed=session.round,
                trajectory=self._trajectory(session),
                per_frame_jf=per_frame,
            )
        else:
            response = RoundResponse(
                round=session.round,
                per_frame_jf=per_frame,
                target_frame=target,
                scribbles=scribbles,
            )
        session.last_response_at = self.clock()
        return response

    def final_summary(self, session_id: str) -> FinalResponse:
        session = self._session(session_id)
        if session.state == "OPEN":
            raise VosbenchError(f"session '{session_id}' is still open")
        return FinalResponse(
            state=session.state,
            rounds_completed=session.round,
            trajectory=self._trajectory(session),
        )

"""Sequence- and split-level evaluation for the offline tracks.

Both tracks score every frame except the sequence's first and last: the
first frame is the semi-supervised input, and the last annotation is
conventionally unreliable.  This exclusion affects every reported number.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentError,
    EmptyReportError,
    FrameGapError,
    SubmissionError,
    UnknownObjectIdError,
    VosbenchError,
)
from .masks import DatasetIndex, MaskSequence, load_frames, load_sequence
from .matching import AccuracyMatrix, pairwise_frame_scores, solve_assignment
from .metrics import MetricTriple, boundary_f, jaccard, summarize

DEFAULT_MAX_PROPOSALS = 20
TASKS = ("semi-supervised", "unsupervised")


@dataclass
class ObjectRow:
    """Scores for one ground-truth object under the chosen assignment."""

    sequence: str
    object_id: int
    matched_id: int | None
    j: MetricTriple
    f: MetricTriple

    @property
    def jf_mean(self) -> float:
        return (self.j.mean + self.f.mean) / 2.0


@dataclass
class SequenceResult:
    name: str
    rows: list[ObjectRow]


@dataclass
class GlobalSummary:
    """The seven headline columns, as unit-interval values."""

    jf: float
    j_mean: float
    j_recall: float
    j_decay: float
    f_mean: float
    f_recall: float
    f_decay: float


@dataclass
class DatasetReport:
    split: str
    task: str
    overall: GlobalSummary
    sequences: list[SequenceResult]

    def rows(self) -> list[ObjectRow]:
        return [row for seq in self.sequences for row in seq.rows]


@dataclass
class SequenceValidation:
    name: str
    reasons: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.reasons


@dataclass
class ValidationReport:
    task: str
    entries: list[SequenceValidation]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> list[SequenceValidation]:
        return [e for e in self.entries if not e.ok]


def evaluated_frames(n_frames: int) -> range:
    """Frame indices that are scored: everything but the first and last."""
    if n_frames < 3:
        raise AlignmentError(
            f"need >= 3 frames to evaluate (first and last are excluded), got {n_frames}"
        )
    return range(1, n_frames - 1)


def _empty_match_series(gt: MaskSequence, object_id: int, frames: range) -> np.ndarray:
    """Scores of a gt object against the all-empty mask: 1 where absent, else 0."""
    out = np.zeros(len(frames))
    for t, fi in enumerate(frames):
        if not gt.frames[fi].binary(object_id).any():
            out[t] = 1.0
    return out


def evaluate_unsupervised(
    gt: MaskSequence,
    proposals: MaskSequence,
    max_proposals: int = DEFAULT_MAX_PROPOSALS,
) -> SequenceResult:
    """Match proposals to ground-truth objects, then score per object.

    Proposal identities are opaque: any relabeling of proposal ids yields the
    identical result.  Extra proposals are never penalized; a ground-truth
    object with no partner scores against the empty mask.
    """
    if not gt.id_set:
        raise AlignmentError(f"sequence '{gt.name}': ground truth has no objects")
    n_proposals = len(proposals.id_set)
    if n_proposals > max_proposals:
        raise SubmissionError(
            f"proposal cap exceeded ({n_proposals} > {max_proposals})"
        )
    frames = evaluated_frames(len(gt))
    J, F = pairwise_frame_scores(gt, proposals, frames)
    values = (J.mean(axis=2) + F.mean(axis=2)) / 2.0 if J.size else np.zeros(J.shape[:2])
    matrix = AccuracyMatrix(values, gt.object_ids(), proposals.object_ids())
    assignment = solve_assignment(matrix)
    col_index = {pid: n for n, pid in enumerate(matrix.col_ids)}
    rows = []
    for l, (gid, pid) in enumerate(assignment.pairs):
        if pid is None:
            j_series = _empty_match_series(gt, gid, frames)
            f_series = j_series
        else:
            n = col_index[pid]
            j_series = J[l, n, :]
            f_series = F[l, n, :]
        rows.append(
            ObjectRow(
                sequence=gt.name,
                object_id=gid,
                matched_id=pid,
                j=summarize(j_series, gid),
                f=summarize(f_series, gid),
            )
        )
    return SequenceResult(gt.name, rows)


def evaluate_semisupervised(gt: MaskSequence, results: MaskSequence) -> SequenceResult:
    """Score results that share the ground-truth id space; no matching.

    A frame-0 mask in the results is accepted but never scored (methods may
    echo the provided first-frame mask).  Ids missing from the results score
    against the empty mask.
    """
    if len(gt) != len(results):
        raise AlignmentError(
            f"frame count mismatch: ground truth {len(gt)}, results {len(results)}"
        )
    if (gt.height, gt.width) != (results.height, results.width):
        raise AlignmentError(
            f"dimension mismatch: ground truth {gt.width}x{gt.height}, "
            f"results {results.width}x{results.height}"
        )
    unknown = results.id_set - gt.id_set
    if unknown:
        raise UnknownObjectIdError(
            f"sequence '{gt.name}': result ids {sorted(unknown)} absent from ground truth"
        )
    frames = evaluated_frames(len(gt))
    rows = []
    for gid in gt.object_ids():
        j_series = np.zeros(len(frames))
        f_series = np.zeros(len(frames))
        for t, fi in enumerate(frames):
            gt_frame = gt.frames[fi]
            res_bin = results.frames[fi].binary(gid)
            gt_bin = gt_frame.binary(gid)
            j_series[t] = jaccard(res_bin, gt_bin, gt_frame.ignore)
            f_series[t] = boundary_f(res_bin, gt_bin, ignore=gt_frame.ignore)
        rows.append(
            ObjectRow(
                sequence=gt.name,
                object_id=gid,
                matched_id=gid,
                j=summarize(j_series, gid),
                f=summarize(f_series, gid),
            )
        )
    return SequenceResult(gt.name, rows)


def validate_sequence_pair(
    gt: MaskSequence,
    results: MaskSequence,
    task: str,
    max_proposals: int = DEFAULT_MAX_PROPOSALS,
) -> list[str]:
    """Reasons this (ground truth, submission) pair cannot be evaluated."""
    reasons = []
    if len(results) != len(gt):
        reasons.append(
            f"frame count mismatch ({len(results)} != {len(gt)})"
        )
    if (results.height, results.width) != (gt.height, gt.width):
        reasons.append(
            f"dimension mismatch ({results.width}x{results.height} != "
            f"{gt.width}x{gt.height})"
        )
    if task == "unsupervised":
        n = len(results.id_set)
        if n > max_proposals:
            reasons.append(f"proposal cap exceeded ({n} > {max_proposals})")
    elif task == "semi-supervised":
        unknown = results.id_set - gt.id_set
        if unknown:
            reasons.append(f"unknown object ids {sorted(unknown)}")
    else:
        raise ValueError(f"unknown task {task!r}")
    return reasons


def validate_submission(
    index: DatasetIndex,
    results_root: str | Path,
    task: str,
    max_proposals: int = DEFAULT_MAX_PROPOSALS,
    void_id: int | None = None,
) -> ValidationReport:
    """Per-sequence pass/fail for a results tree against one split."""
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    results_root = Path(results_root)
    if not results_root.is_dir():
        raise OSError(f"results root is not a readable directory: {results_root}")
    entries = []
    for name in index.sequence_names():
        entry = SequenceValidation(name)
        seq_dir = results_root / name
        if not seq_dir.is_dir():
            entry.reasons.append("missing sequence folder")
            entries.append(entry)
            continue
        try:
            results = load_frames(seq_dir, name)
        except FrameGapError as exc:
            entry.reasons.append(
                "missing frames: " + ", ".join(f"{i:05d}" for i in exc.missing)
            )
            entries.append(entry)
            continue
        except VosbenchError as exc:
            entry.reasons.append(str(exc))
            entries.append(entry)
            continue
        gt = load_sequence(index, name, "ground-truth", void_id=void_id)
        entry.reasons.extend(validate_sequence_pair(gt, results, task, max_proposals))
        entries.append(entry)
    return ValidationReport(task, entries)


def aggregate(results: list[SequenceResult], split: str, task: str) -> DatasetReport:
    """Unweighted mean over every object row in the split.

    Objects are the unit of averaging, never sequences, so a sequence with
    three objects weighs three times a single-object one.
    """
    ordered = [
        SequenceResult(seq.name, sorted(seq.rows, key=lambda r: r.object_id))
        for seq in sorted(results, key=lambda r: r.name)
    ]
    rows = [row for seq in ordered for row in seq.rows]
    if not rows:
        raise EmptyReportError("no object rows to aggregate")
    overall = GlobalSummary(
        jf=float(np.mean([r.jf_mean for r in rows])),
        j_mean=float(np.mean([r.j.mean for r in rows])),
        j_recall=float(np.mean([r.j.recall for r in rows])),
        j_decay=float(np.mean([r.j.decay for r in rows])),
        f_mean=float(np.mean([r.f.mean for r in rows])),
        f_recall=float(np.mean([r.f.recall for r in rows])),
        f_decay=float(np.mean([r.f.decay for r in rows])),
    )
    return DatasetReport(split, task, overall, ordered)


def _evaluate_one(args) -> tuple[str, list[str], SequenceResult | None]:
    """Worker: load, validate, and evaluate a single sequence."""
    (index, name, results_root, task, max_proposals, void_id) = args
    seq_dir = Path(results_root) / name
    if not seq_dir.is_dir():
        return name, ["missing sequence folder"], None
    try:
        results = load_frames(seq_dir, name)
    except FrameGapError as exc:
        reason = "missing frames: " + ", ".join(f"{i:05d}" for i in exc.missing)
        return name, [reason], None
    except VosbenchError as exc:
        return name, [str(exc)], None
    gt = load_sequence(index, name, "ground-truth", void_id=void_id)
    reasons = validate_sequence_pair(gt, results, task, max_proposals)
    if reasons:
        return name, reasons, None
    if task == "unsupervised":
        result = evaluate_unsupervised(gt, results, max_proposals)
    else:
        result = evaluate_semisupervised(gt, results)
    return name, [], result


def evaluate_split(
    index: DatasetIndex,
    results_root: str | Path,
    task: str,
    max_proposals: int = DEFAULT_MAX_PROPOSALS,
    jobs: int = 1,
    void_id: int | None = None,
) -> tuple[ValidationReport, DatasetReport | None]:
    """Validate and evaluate a whole split; one pass over the data.

    Sequences are processed in name order; with `jobs` > 1 they run in a
    process pool whose results are merged back in the same order, so the
    report is byte-identical regardless of parallelism.
    """
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    names = sorted(index.sequence_names())
    work = [(index, n, str(results_root), task, max_proposals, void_id) for n in names]
    if jobs == 1 or len(names) <= 1:
        outcomes = [_evaluate_one(w) for w in work]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_evaluate_one, work))
    validation = ValidationReport(
        task, [SequenceValidation(n, list(reasons)) for n, reasons, _ in outcomes]
    )
    if not validation.ok:
        return validation, None
    results = [res for _, _, res in outcomes if res is not None]
    return validation, aggregate(results, index.split, task)

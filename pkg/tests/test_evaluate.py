"""Track evaluators, frame exclusion, aggregation weighting, validation."""

from __future__ import annotations

import shutil

import numpy as np
import pytest

from vosbench.errors import (
    AlignmentError,
    EmptyReportError,
    SubmissionError,
    UnknownObjectIdError,
)
from vosbench.evaluate import (
    ObjectRow,
    SequenceResult,
    aggregate,
    evaluate_semisupervised,
    evaluate_split,
    evaluate_unsupervised,
    evaluated_frames,
    validate_submission,
)
from vosbench.masks import MaskSequence, MultiObjectMask, load_sequence
from vosbench.metrics import MetricTriple
from vosbench.synth import (
    ObjectSpec,
    SceneSpec,
    perturb,
    render_sequence,
)

from conftest import square_mask, static_square_scene, two_object_scene


def _constant_row(jf: float, sequence: str = "seq", object_id: int = 1) -> ObjectRow:
    triple = MetricTriple(mean=jf, recall=float(jf > 0.5), decay=0.0)
    return ObjectRow(sequence, object_id, object_id, triple, triple)


# -- frame exclusion --------------------------------------------------------


def test_evaluated_frames_drop_first_and_last():
    assert list(evaluated_frames(10)) == list(range(1, 9))
    assert list(evaluated_frames(3)) == [1]


def test_evaluated_frames_need_three_frames():
    with pytest.raises(AlignmentError):
        evaluated_frames(2)


def test_first_and_last_frames_do_not_affect_scores():
    gt = render_sequence(static_square_scene(frames=6))
    # corrupt the prediction only on the excluded first and last frames
    frames = [MultiObjectMask(f.labels.copy()) for f in gt.frames]
    frames[0] = MultiObjectMask(np.zeros_like(frames[0].labels))
    frames[-1] = MultiObjectMask(np.zeros_like(frames[-1].labels))
    pred = MaskSequence(gt.name, frames, set(gt.id_set))
    result = evaluate_semisupervised(gt, pred)
    assert result.rows[0].j.mean == 1.0
    assert result.rows[0].f.mean == 1.0


# -- semi-supervised --------------------------------------------------------


def test_semisupervised_identity_is_perfect():
    gt = render_sequence(two_object_scene())
    result = evaluate_semisupervised(gt, gt)
    assert [r.object_id for r in result.rows] == [1, 2]
    for row in result.rows:
        assert row.matched_id == row.object_id
        assert row.j == MetricTriple(1.0, 1.0, 0.0)
        assert row.f == MetricTriple(1.0, 1.0, 0.0)
        assert row.jf_mean == 1.0


def test_semisupervised_shifted_square_mean():
    gt = render_sequence(static_square_scene(side=10, frames=6))
    pred = perturb(gt, "shift", dx=5)
    result = evaluate_semisupervised(gt, pred)
    assert result.rows[0].j.mean == pytest.approx(1 / 3, abs=1e-12)


def test_semisupervised_rejects_unknown_ids():
    gt = render_sequence(static_square_scene())
    wrong = perturb(gt, "relabel", perm={1: 9})
    with pytest.raises(UnknownObjectIdError):
        evaluate_semisupervised(gt, wrong)


def test_semisupervised_rejects_frame_count_mismatch():
    gt = render_sequence(static_square_scene(frames=6))
    shorter = MaskSequence(gt.name, gt.frames[:-1], set(gt.id_set))
    with pytest.raises(AlignmentError):
        evaluate_semisupervised(gt, shorter)


def test_semisupervised_rejects_dimension_mismatch():
    gt = render_sequence(static_square_scene(frames=4))
    other = [square_mask(8, 8, 1, 1, 3) for _ in range(4)]
    with pytest.raises(AlignmentError):
        evaluate_semisupervised(gt, MaskSequence(gt.name, other, {1}))


def test_semisupervised_missing_object_scores_zero():
    gt = render_sequence(two_object_scene())
    frames = []
    for frame in gt.frames:
        labels = frame.labels.copy()
        labels[labels == 2] = 0
        frames.append(MultiObjectMask(labels))
    pred = MaskSequence(gt.name, frames, set(gt.id_set))
    result = evaluate_semisupervised(gt, pred)
    by_id = {r.object_id: r for r in result.rows}
    assert by_id[1].j.mean == 1.0
    assert by_id[2].j.mean == 0.0
    assert by_id[2].f.mean == 0.0


def test_per_frame_series_drive_recall_and_decay():
    # object present for the first half of the scored frames only
    gt = render_sequence(static_square_scene(frames=10))
    frames = []
    for i, frame in enumerate(gt.frames):
        labels = frame.labels.copy()
        if i >= 5:
            labels[:] = 0
        frames.append(MultiObjectMask(labels))
    pred = MaskSequence(gt.name, frames, set(gt.id_set))
    row = evaluate_semisupervised(gt, pred).rows[0]
    # scored frames 1..8: J = [1,1,1,1,0,0,0,0]
    assert row.j.mean == 0.5
    assert row.j.recall == 0.5
    assert row.j.decay == 1.0


# -- unsupervised -----------------------------------------------------------


def test_unsupervised_identity_and_relabeling():
    gt = render_sequence(two_object_scene())
    for perm in ({1: 1, 2: 2}, {1: 2, 2: 1}, {1: 11, 2: 7}):
        pred = perturb(gt, "relabel", perm=perm)
        result = evaluate_unsupervised(gt, pred)
        assert {r.object_id: r.matched_id for r in result.rows} == perm
        for row in result.rows:
            assert row.j.mean == 1.0 and row.f.mean == 1.0


def test_unsupervised_unmatched_objects_score_empty_prediction():
    gt = render_sequence(two_object_scene())
    frames = []
    for frame in gt.frames:
        labels = frame.labels.copy()
        labels[labels == 2] = 0
        frames.append(MultiObjectMask(labels))
    proposals = MaskSequence(gt.name, frames)  # only object 1 proposed
    result = evaluate_unsupervised(gt, proposals)
    by_id = {r.object_id: r for r in result.rows}
    assert by_id[1].matched_id == 1
    assert by_id[1].jf_mean == 1.0
    assert by_id[2].matched_id is None
    assert by_id[2].jf_mean == 0.0  # object 2 is present on every scored frame


def test_unsupervised_extra_proposals_are_not_penalized():
    gt = render_sequence(static_square_scene(frames=5))
    labels_extra = []
    for frame in gt.frames:
        labels = frame.labels.copy()
        labels[0:2, 0:2] = 9  # noise proposal in a corner
        labels_extra.append(MultiObjectMask(labels))
    proposals = MaskSequence(gt.name, labels_extra)
    result = evaluate_unsupervised(gt, proposals)
    assert len(result.rows) == 1
    assert result.rows[0].matched_id == 1
    assert result.rows[0].jf_mean == 1.0


def test_unsupervised_proposal_cap():
    gt = render_sequence(static_square_scene(frames=4))
    labels = gt.frames[0].labels.copy()
    for oid in range(2, 30):
        labels[oid % 4, oid % 7] = oid
    frames = [MultiObjectMask(labels)] * 4
    proposals = MaskSequence(gt.name, frames)
    with pytest.raises(SubmissionError, match="proposal cap exceeded"):
        evaluate_unsupervised(gt, proposals, max_proposals=20)


def test_unsupervised_empty_gt_is_rejected():
    empty = MaskSequence("seq", [square_mask(8, 8, 0, 0, 0)] * 3)
    pred = MaskSequence("seq", [square_mask(8, 8, 1, 1, 2)] * 3)
    with pytest.raises(AlignmentError):
        evaluate_unsupervised(empty, pred)


def test_unsupervised_empty_proposals_score_zero_rows():
    gt = render_sequence(static_square_scene(frames=4))
    empties = [MultiObjectMask(np.zeros_like(gt.frames[0].labels)) for _ in range(4)]
    result = evaluate_unsupervised(gt, MaskSequence(gt.name, empties))
    assert result.rows[0].matched_id is None
    assert result.rows[0].jf_mean == 0.0


# -- aggregation ------------------------------------------------------------


def test_aggregate_weights_objects_not_sequences():
    solo = SequenceResult("solo", [_constant_row(1.0, "solo", 1)])
    trio = SequenceResult(
        "trio", [_constant_row(0.0, "trio", i) for i in (1, 2, 3)]
    )
    report = aggregate([solo, trio], "tiny", "unsupervised")
    assert report.overall.jf == 0.25  # 4 object rows, one of them perfect


def test_aggregate_sorts_rows_deterministically():
    a = SequenceResult("b-seq", [_constant_row(0.5, "b-seq", 2), _constant_row(0.5, "b-seq", 1)])
    b = SequenceResult("a-seq", [_constant_row(0.5, "a-seq", 9)])
    report = aggregate([a, b], "tiny", "unsupervised")
    assert [s.name for s in report.sequences] == ["a-seq", "b-seq"]
    assert [r.object_id for r in report.rows()] == [9, 1, 2]


def test_aggregate_refuses_empty():
    with pytest.raises(EmptyReportError):
        aggregate([], "tiny", "unsupervised")


# -- split-level orchestration ---------------------------------------------


def _identity_results(index, tmp_path):
    results = tmp_path / "results"
    results.mkdir(exist_ok=True)
    for name in index.sequence_names():
        shutil.copytree(index.annotation_dir(name), results / name)
    return results


def test_validate_submission_passes_identity(small_index, tmp_path):
    results = _identity_results(small_index, tmp_path)
    report = validate_submission(small_index, results, "semi-supervised")
    assert report.ok
    assert report.failures() == []


def test_validate_submission_flags_missing_sequence(small_index, tmp_path):
    results = _identity_results(small_index, tmp_path)
    shutil.rmtree(results / "beta")
    report = validate_submission(small_index, results, "semi-supervised")
    assert not report.ok
    assert ["missing sequence folder"] in [e.reasons for e in report.failures()]


def test_validate_submission_flags_missing_frame(small_index, tmp_path):
    results = _identity_results(small_index, tmp_path)
    (results / "alpha" / "00002.png").unlink()
    report = validate_submission(small_index, results, "semi-supervised")
    failures = {e.name: e.reasons for e in report.failures()}
    assert "alpha" in failures
    assert "00002" in failures["alpha"][0]


def test_evaluate_split_identity_both_tasks(small_index, tmp_path):
    results = _identity_results(small_index, tmp_path)
    for task in ("semi-supervised", "unsupervised"):
        validation, report = evaluate_split(small_index, results, task)
        assert validation.ok
        assert report is not None
        assert report.overall.jf == 1.0
        assert report.overall.j_decay == 0.0


def test_evaluate_split_parallel_equals_serial(small_index, tmp_path):
    results = _identity_results(small_index, tmp_path)
    _, serial = evaluate_split(small_index, results, "unsupervised", jobs=1)
    _, parallel = evaluate_split(small_index, results, "unsupervised", jobs=4)
    assert serial == parallel


def test_evaluate_split_rejects_capped_submission(small_index, tmp_path):
    results = _identity_results(small_index, tmp_path)
    validation, report = evaluate_split(
        small_index, results, "unsupervised", max_proposals=1
    )
    assert report is None
    assert not validation.ok
    assert any(
        "proposal cap exceeded (2 > 1)" in reason
        for entry in validation.failures()
        for reason in entry.reasons
    )


def test_void_regions_not_scored(small_index, tmp_path):
    from vosbench.masks import RESERVED_ID, encode_mask, index_dataset

    # gt variant whose first row is void; the prediction hallucinates exactly
    # there, which must not cost anything once the void id is honored
    gt = load_sequence(small_index, "alpha")
    root = tmp_path / "voiddata"
    ann = root / "Annotations_unsupervised/480p/alpha"
    img = root / "JPEGImages/480p/alpha"
    results = tmp_path / "voidresults/alpha"
    for directory in (ann, img, results):
        directory.mkdir(parents=True)
    void_band = np.zeros_like(gt.frames[0].labels, dtype=bool)
    void_band[0, :] = True
    for i, frame in enumerate(gt.frames):
        gt_mask = MultiObjectMask(frame.labels.copy(), void_band.copy())
        (ann / f"{i:05d}.png").write_bytes(encode_mask(gt_mask))
        (img / f"{i:05d}.jpg").write_bytes(b"\xff\xd8\xff\xd9")
        pred_labels = frame.labels.copy()
        pred_labels[0, :] = 1
        (results / f"{i:05d}.png").write_bytes(encode_mask(MultiObjectMask(pred_labels)))
    (root / "ImageSets/2019").mkdir(parents=True)
    (root / "ImageSets/2019/void.txt").write_text("alpha\n")

    index = index_dataset(root, "void")
    validation, report = evaluate_split(
        index, tmp_path / "voidresults", "semi-supervised", void_id=RESERVED_ID
    )
    assert validation.ok
    assert report.overall.jf == 1.0

"""Assignment solver against the exhaustive oracle and its tie-break rules."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from vosbench.errors import AlignmentError, MatrixSizeError
from vosbench.matching import (
    AccuracyMatrix,
    brute_force_assignment,
    build_accuracy_matrix,
    pairwise_frame_scores,
    solve_assignment,
)
from vosbench.synth import render_sequence

from conftest import two_object_scene


def _matrix(values, row_ids=None, col_ids=None) -> AccuracyMatrix:
    values = np.asarray(values, dtype=np.float64)
    rows = row_ids or list(range(1, values.shape[0] + 1))
    cols = col_ids or list(range(1, values.shape[1] + 1))
    return AccuracyMatrix(values, rows, cols)


# -- basic solutions --------------------------------------------------------


def test_two_by_two_prefers_diagonal():
    assignment = solve_assignment(_matrix([[0.9, 0.1], [0.2, 0.8]]))
    assert assignment.pairs == [(1, 1), (2, 2)]
    assert assignment.objective == 0.9 + 0.8


def test_cross_assignment_when_off_diagonal_wins():
    assignment = solve_assignment(_matrix([[0.1, 0.9], [0.8, 0.2]]))
    assert assignment.pairs == [(1, 2), (2, 1)]
    assert assignment.objective == 0.9 + 0.8


def test_fewer_proposals_leave_rows_unmatched():
    assignment = solve_assignment(_matrix([[0.9, 0.3], [0.8, 0.1], [0.7, 0.6]]))
    unmatched = [gt for gt, prop in assignment.pairs if prop is None]
    assert len(unmatched) == 1
    got = sum(
        _matrix([[0.9, 0.3], [0.8, 0.1], [0.7, 0.6]]).values[g - 1][p - 1]
        for g, p in assignment.pairs
        if p is not None
    )
    assert assignment.objective == got


def test_extra_proposals_cost_nothing():
    base = solve_assignment(_matrix([[0.9, 0.1], [0.2, 0.8]]))
    padded = solve_assignment(_matrix([[0.9, 0.1, 0.0, 0.0], [0.2, 0.8, 0.0, 0.0]]))
    assert padded.objective == base.objective
    assert padded.matched() == base.matched()


def test_empty_matrix_gives_empty_assignment():
    assignment = solve_assignment(_matrix(np.zeros((0, 0)), row_ids=[], col_ids=[]))
    assert assignment.pairs == []
    assert assignment.objective == 0.0


def test_single_cell():
    assignment = solve_assignment(_matrix([[0.4]]))
    assert assignment.pairs == [(1, 1)]
    assert assignment.objective == 0.4


# -- deterministic tie-breaking --------------------------------------------


def test_all_equal_matrix_breaks_ties_to_identity():
    assignment = solve_assignment(
        _matrix([[0.5, 0.5], [0.5, 0.5]], row_ids=[1, 2], col_ids=[10, 20])
    )
    assert assignment.pairs == [(1, 10), (2, 20)]


def test_tied_zero_column_prefers_matching_over_none():
    assignment = solve_assignment(_matrix([[0.9, 0.0], [0.2, 0.0]]))
    assert assignment.pairs == [(1, 1), (2, 2)]


def test_square_zero_matrix_matches_in_order():
    assignment = solve_assignment(_matrix(np.zeros((3, 3))))
    assert assignment.pairs == [(1, 1), (2, 2), (3, 3)]


def test_rectangular_zero_matrix_unmatches_last_row():
    assignment = solve_assignment(_matrix(np.zeros((3, 2))))
    assert assignment.pairs == [(1, 1), (2, 2), (3, None)]


def test_brute_force_agrees_on_ties():
    values = [[0.5, 0.5, 0.1], [0.5, 0.5, 0.1]]
    assert solve_assignment(_matrix(values)).pairs == brute_force_assignment(_matrix(values)).pairs


# -- oracle agreement -------------------------------------------------------


def test_solver_matches_brute_force_on_random_matrices():
    rng = np.random.default_rng(20190401)
    for _ in range(200):
        L = int(rng.integers(1, 7))
        N = int(rng.integers(1, 7))
        matrix = _matrix(rng.random((L, N)))
        fast = solve_assignment(matrix)
        slow = brute_force_assignment(matrix)
        assert fast.objective == slow.objective  # bit-equal doubles
        assert fast.pairs == slow.pairs


def test_solver_beats_every_explicit_injection():
    rng = np.random.default_rng(5)
    values = rng.random((4, 4))
    matrix = _matrix(values)
    best = solve_assignment(matrix).objective
    for perm in itertools.permutations(range(4)):
        candidate = sum(values[i, perm[i]] for i in range(4))
        assert best >= candidate or abs(best - candidate) < 1e-12


def test_brute_force_size_cap():
    with pytest.raises(MatrixSizeError):
        brute_force_assignment(_matrix(np.zeros((9, 3))))
    with pytest.raises(MatrixSizeError):
        brute_force_assignment(_matrix(np.zeros((3, 9))))


def test_column_permutation_only_renames_matches():
    rng = np.random.default_rng(13)
    values = rng.random((3, 5))
    base = solve_assignment(_matrix(values, col_ids=[1, 2, 3, 4, 5]))
    order = [3, 0, 4, 1, 2]
    permuted_values = values[:, order]
    permuted_ids = [[1, 2, 3, 4, 5][i] for i in order]
    permuted = solve_assignment(_matrix(permuted_values, col_ids=permuted_ids))
    assert permuted.objective == base.objective
    assert permuted.matched() == base.matched()


def test_adding_a_column_never_hurts():
    rng = np.random.default_rng(17)
    for _ in range(30):
        values = rng.random((3, 3))
        base = solve_assignment(_matrix(values)).objective
        extended = np.hstack([values, rng.random((3, 1))])
        grown = solve_assignment(_matrix(extended)).objective
        assert grown >= base


# -- accuracy matrices ------------------------------------------------------


def test_accuracy_matrix_validates_shape():
    with pytest.raises(ValueError):
        AccuracyMatrix(np.zeros((2, 2)), [1], [1, 2])
    with pytest.raises(ValueError):
        AccuracyMatrix(np.zeros((2, 2)), [1, 2], [1])


def test_build_accuracy_matrix_averages_frame_means():
    gt = render_sequence(two_object_scene())
    frames = range(1, len(gt) - 1)
    matrix = build_accuracy_matrix(gt, gt, frames)
    j, f = pairwise_frame_scores(gt, gt, frames)
    expect = (j.mean(axis=2) + f.mean(axis=2)) / 2.0
    assert matrix.row_ids == [1, 2] and matrix.col_ids == [1, 2]
    assert np.array_equal(matrix.values, expect)
    assert matrix.values[0, 0] == 1.0 and matrix.values[1, 1] == 1.0


def test_pairwise_frame_scores_on_rendered_pair():
    gt = render_sequence(two_object_scene())
    j, f = pairwise_frame_scores(gt, gt, range(1, len(gt) - 1))
    assert j.shape == (2, 2, len(gt) - 2)
    # identical sequences: the diagonal is exact agreement on every frame
    assert np.all(j[0, 0] == 1.0) and np.all(j[1, 1] == 1.0)
    assert np.all(f[0, 0] == 1.0) and np.all(f[1, 1] == 1.0)
    # the bands never overlap, so cross pairs share no pixels
    assert np.all(j[0, 1] == 0.0) and np.all(j[1, 0] == 0.0)


def test_pairwise_frame_scores_rejects_misaligned_inputs():
    gt = render_sequence(two_object_scene("gt"))
    other = render_sequence(two_object_scene("other"))
    short = type(other)(other.name, other.frames[:-1])
    with pytest.raises(AlignmentError):
        pairwise_frame_scores(gt, short, range(1, len(gt) - 1))

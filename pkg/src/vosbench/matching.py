"""Accuracy matrix construction and maximum-weight bipartite assignment.

Ground-truth objects are rows, proposals are columns.  The solver finds the
injective row-to-column map with maximal total score; rows left over when
there are fewer columns than rows map to None and contribute zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlignmentError, MatrixSizeError
from .masks import MaskSequence
from .metrics import boundary_f, jaccard

BRUTE_FORCE_CAP = 8


@dataclass
class AccuracyMatrix:
    """L x N grid of per-object-pair scores in [0, 1]."""

    values: np.ndarray
    row_ids: list[int]
    col_ids: list[int]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {values.shape}")
        if values.shape != (len(self.row_ids), len(self.col_ids)):
            raise ValueError(
                f"shape {values.shape} does not match "
                f"{len(self.row_ids)} row ids / {len(self.col_ids)} col ids"
            )
        self.values = values

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass
class Assignment:
    """Injective map ground-truth id -> proposal id (or None), with its score."""

    pairs: list[tuple[int, int | None]]
    objective: float

    def matched(self) -> dict[int, int]:
        return {g: p for g, p in self.pairs if p is not None}


def pairwise_frame_scores(
    gt: MaskSequence,
    proposals: MaskSequence,
    frame_indices: Sequence[int],
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame J and F for every (gt object, proposal) pair.

    Returns two arrays of shape (L, N, T) ordered by sorted object id and the
    given frame indices.
    """
    if len(gt) != len(proposals):
        raise AlignmentError(
            f"frame count mismatch: ground truth {len(gt)}, proposals {len(proposals)}"
        )
    if (gt.height, gt.width) != (proposals.height, proposals.width):
        raise AlignmentError(
            f"dimension mismatch: ground truth {gt.width}x{gt.height}, "
            f"proposals {proposals.width}x{proposals.height}"
        )
    row_ids = gt.object_ids()
    col_ids = proposals.object_ids()
    T = len(frame_indices)
    J = np.zeros((len(row_ids), len(col_ids), T))
    F = np.zeros((len(row_ids), len(col_ids), T))
    for t, fi in enumerate(frame_indices):
        gt_frame = gt.frames[fi]
        pr_frame = proposals.frames[fi]
        ignore = gt_frame.ignore
        for l, gid in enumerate(row_ids):
            gt_bin = gt_frame.binary(gid)
            for n, pid in enumerate(col_ids):
                pr_bin = pr_frame.binary(pid)
                J[l, n, t] = jaccard(pr_bin, gt_bin, ignore)
                F[l, n, t] = boundary_f(pr_bin, gt_bin, ignore=ignore)
    return J, F


def build_accuracy_matrix(
    gt: MaskSequence,
    proposals: MaskSequence,
    frame_indices: Sequence[int],
) -> AccuracyMatrix:
    """Score every pair as (mean-over-frames J + mean-over-frames F) / 2."""
    J, F = pairwise_frame_scores(gt, proposals, frame_indices)
    values = (J.mean(axis=2) + F.mean(axis=2)) / 2.0 if J.size else np.zeros(J.shape[:2])
    return AccuracyMatrix(values, gt.object_ids(), proposals.object_ids())


def _row_order_sum(values: np.ndarray, cols: list[int | None]) -> float:
    """Objective summed in row order; keeps float results comparable."""
    total = 0.0
    for l, c in enumerate(cols):
        if c is not None:
            total += float(values[l, c])
    return total


def _hungarian(cost_rows: list[list[float]], L: int, N: int) -> list[int | None]:
    """Shortest-augmenting-path assignment minimizing the padded cost.

    `cost_rows` is the L x N cost grid (callers pass negated scores); dummy
    rows/columns padding it to a square cost 0, and rows landing on a dummy
    column come back as None.  O(n^3), deterministic.
    """
    n = max(L, N)
    if n == 0:
        return []
    cost = []
    for i in range(n):
        if i < L:
            cost.append(cost_rows[i] + [0.0] * (n - N))
        else:
            cost.append([0.0] * n)
    INF = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match_col = [0] * (n + 1)  # column j (1-based) -> row (1-based), 0 = free
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match_col[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            row = cost[i0 - 1]
            ui0 = u[i0]
            delta = INF
            j1 = -1
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1
    result: list[int | None] = [None] * L
    for j in range(1, n + 1):
        row_idx = match_col[j]
        if 1 <= row_idx <= L and j - 1 < N:
            result[row_idx - 1] = j - 1
    return result


def _solve_cols(values: np.ndarray) -> list[int | None]:
    L, N = values.shape
    neg = [[-x for x in row] for row in values.tolist()]
    return _hungarian(neg, L, N)


def _lex_refine(values: np.ndarray, initial: list[int | None]) -> list[int | None]:
    """Among optimal assignments, pick the lexicographically smallest.

    Rows are fixed front to back; at each row the smallest still-free column
    that preserves the optimal objective wins (None sorts after any column).
    Comparisons are exact double equality; deliberate ties in tests are built
    from dyadic values so the sums stay exact.
    """
    L, N = values.shape
    best = list(initial)
    target = _row_order_sum(values, best)
    used: set[int] = set()
    for l in range(L):
        current = best[l]
        free = [c for c in range(N) if c not in used]
        candidates = free if current is None else [c for c in free if c < current]
        for c in candidates:
            sub_cols = [col for col in free if col != c]
            if l + 1 < L:
                sub = _solve_cols(values[np.ix_(range(l + 1, L), sub_cols)])
            else:
                sub = []
            completion = best[:l] + [c] + [
                None if s is None else sub_cols[s] for s in sub
            ]
            cand_total = _row_order_sum(values, completion)
            if cand_total >= target:
                best = completion
                target = cand_total
                current = c
                break
        if current is not None:
            used.add(current)
    return best


def solve_assignment(matrix: AccuracyMatrix) -> Assignment:
    """Globally optimal injective assignment with deterministic tie-breaking."""
    values = matrix.values
    if values.size == 0:
        pairs = [(g, None) for g in matrix.row_ids]
        return Assignment(pairs, 0.0)
    cols = _lex_refine(values, _solve_cols(values))
    pairs: list[tuple[int, int | None]] = []
    for l, c in enumerate(cols):
        pairs.append((matrix.row_ids[l], None if c is None else matrix.col_ids[c]))
    return Assignment(pairs, _row_order_sum(values, cols))


def brute_force_assignment(matrix: AccuracyMatrix) -> Assignment:
    """Exhaustive oracle over all injective maps; refuses beyond 8x8."""
    L, N = matrix.rows, matrix.cols
    if L > BRUTE_FORCE_CAP or N > BRUTE_FORCE_CAP:
        raise MatrixSizeError(
            f"brute force capped at {BRUTE_FORCE_CAP}x{BRUTE_FORCE_CAP}, got {L}x{N}"
        )
    values = matrix.values
    if L == 0 or N == 0:
        return Assignment([(g, None) for g in matrix.row_ids], 0.0)

    best_cols: list[int | None] | None = None
    best_val = -1.0

    def lex_key(cols: list[int | None]) -> tuple:
        return tuple(N if c is None else c for c in cols)

    k = min(L, N)
    for rows in itertools.combinations(range(L), k):
        for perm in itertools.permutations(range(N), k):
            cols: list[int | None] = [None] * L
            for r, c in zip(rows, perm):
                cols[r] = c
            val = _row_order_sum(values, cols)
            if best_cols is None or val > best_val or (
                val == best_val and lex_key(cols) < lex_key(best_cols)
            ):
                best_cols = cols
                best_val = val
    assert best_cols is not None
    pairs = [
        (matrix.row_ids[l], None if c is None else matrix.col_ids[c])
        for l, c in enumerate(best_cols)
    ]
    return Assignment(pairs, best_val)

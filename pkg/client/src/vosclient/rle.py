"""Run-length codec for label grids on the wire.

The wire format is a flat row-major list ``[id, run, id, run, ...]`` whose
runs are maximal (adjacent entries never share an id) and sum to exactly
``width * height``.  Maximal runs make the encoding canonical: two grids are
pixel-identical if and only if their encodings are equal lists.
"""

from __future__ import annotations

import numpy as np

MAX_LABEL = 255


class RleError(ValueError):
    """Malformed run-length payload."""


def encode(labels: np.ndarray) -> list[int]:
    """Encode a 2-D label grid; the input is never modified."""
    grid = np.asarray(labels)
    if grid.ndim != 2:
        raise RleError(f"labels must be 2-D, got shape {grid.shape}")
    if grid.size == 0:
        raise RleError("labels must be non-empty")
    flat = grid.reshape(-1)
    if flat.min() < 0 or flat.max() > MAX_LABEL:
        raise RleError(f"labels must lie in 0..{MAX_LABEL}")
    boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [flat.size]))
    out: list[int] = []
    for start, end in zip(starts, ends):
        out.append(int(flat[start]))
        out.append(int(end - start))
    return out


def decode(rle: list[int], width: int, height: int) -> np.ndarray:
    """Decode a flat run list back into a ``(height, width)`` uint8 grid."""
    if width < 1 or height < 1:
        raise RleError(f"non-positive dimensions {width}x{height}")
    if len(rle) % 2 != 0 or not rle:
        raise RleError(f"run list must have positive even length, got {len(rle)}")
    ids = rle[0::2]
    runs = rle[1::2]
    for value in ids:
        if not 0 <= int(value) <= MAX_LABEL:
            raise RleError(f"label {value} outside 0..{MAX_LABEL}")
    for run in runs:
        if int(run) < 1:
            raise RleError(f"run length {run} must be positive")
    total = sum(int(r) for r in runs)
    if total != width * height:
        raise RleError(f"runs cover {total} pixels, grid has {width * height}")
    flat = np.repeat(np.asarray(ids, dtype=np.uint8), np.asarray(runs, dtype=np.int64))
    return flat.reshape(height, width)

"""Wire-level encodings for the interactive service.

Run-length encoding of a label grid: a flat list of alternating
``(id, run-length)`` pairs covering the grid row-major, top-left to
bottom-right.  Runs are maximal, so consecutive pairs always carry different
ids; this makes the encoding canonical and round-trips bit-exact.
"""

from __future__ import annotations

import numpy as np

from .errors import MaskFormatError


def rle_encode(labels: np.ndarray) -> list[int]:
    """Encode a 2-D uint8 label grid as [id, run, id, run, ...]."""
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise MaskFormatError(f"labels must be 2-D, got shape {labels.shape}")
    flat = labels.ravel()
    if flat.size == 0:
        return []
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [flat.size]))
    out = np.empty(2 * starts.size, dtype=np.int64)
    out[0::2] = flat[starts]
    out[1::2] = ends - starts
    return out.tolist()


def rle_decode(rle: list[int], width: int, height: int) -> np.ndarray:
    """Decode [id, run, id, run, ...] back into an (height, width) grid."""
    if len(rle) % 2 != 0:
        raise MaskFormatError("rle must hold an even number of values")
    pairs = np.asarray(rle, dtype=np.int64).reshape(-1, 2) if rle else np.zeros((0, 2), np.int64)
    ids = pairs[:, 0]
    runs = pairs[:, 1]
    if len(runs) and runs.min() <= 0:
        raise MaskFormatError("rle run lengths must be positive")
    if len(ids) and (ids.min() < 0 or ids.max() > 255):
        raise MaskFormatError("rle ids must be in 0..255")
    total = int(runs.sum())
    if total != width * height:
        raise MaskFormatError(
            f"rle covers {total} pixels, expected {width * height} ({width}x{height})"
        )
    flat = np.repeat(ids.astype(np.uint8), runs)
    return flat.reshape(height, width)

"""Multi-object mask codec and dataset/results tree walking.

Masks are stored as single-channel 8-bit palette-indexed PNG files where the
palette index IS the object id (0 = background).  One id per pixel makes
overlapping objects unrepresentable by construction.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    DatasetLayoutError,
    DimensionMismatchError,
    FrameGapError,
    LabelRangeError,
    MaskFormatError,
)

# Default ceiling for object ids.  255 is reserved: some dataset releases use
# it as a void/ignore label, so it is rejected unless mapped via `void_id`.
MAX_OBJECT_ID = 254
RESERVED_ID = 255

ANNOTATION_DIR = "Annotations_unsupervised/480p"
IMAGE_DIR = "JPEGImages/480p"
IMAGESET_DIR = "ImageSets/2019"
SCRIBBLE_DIR = "Scribbles"

SPLIT_NAMES = ("train", "val", "test-dev", "test-challenge")

_FRAME_RE = re.compile(r"^(\d{5})\.(png|jpg)$")


def color_palette() -> bytes:
    """768-byte RGB palette: index 0 black, 1 (128,0,0), 2 (0,128,0), ...

    Bit-reversal colormap used by the DAVIS/VOC mask distributions.  Only the
    indices are contractual; the colors exist so masks render recognizably.
    """
    palette = bytearray(768)
    for k in range(256):
        kk, r, g, b = k, 0, 0, 0
        for shift in range(7, -1, -1):
            r |= (kk & 1) << shift
            g |= ((kk >> 1) & 1) << shift
            b |= ((kk >> 2) & 1) << shift
            kk >>= 3
        palette[3 * k : 3 * k + 3] = (r, g, b)
    return bytes(palette)


DAVIS_PALETTE = color_palette()


@dataclass
class MultiObjectMask:
    """One frame's labeling: a row-major grid of object ids, 0 = background.

    `ignore` marks void pixels excluded from metric numerators and
    denominators; it is only populated when a void id was mapped at load time.
    """

    labels: np.ndarray
    ignore: np.ndarray | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise MaskFormatError(f"labels must be H x W, got shape {labels.shape}")
        if labels.dtype != np.uint8:
            if labels.size and (labels.min() < 0 or labels.max() > 255):
                raise LabelRangeError("object ids must fit in uint8")
            labels = labels.astype(np.uint8)
        self.labels = labels
        if self.ignore is not None:
            ignore = np.asarray(self.ignore, dtype=bool)
            if ignore.shape != labels.shape:
                raise DimensionMismatchError("ignore mask shape differs from labels")
            self.ignore = ignore

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def id_set(self) -> set[int]:
        """Object ids present in this frame (background excluded)."""
        ids = np.unique(self.labels)
        return {int(i) for i in ids if i != 0}

    def binary(self, object_id: int) -> np.ndarray:
        """Boolean support of one object."""
        return self.labels == object_id

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiObjectMask):
            return NotImplemented
        if not np.array_equal(self.labels, other.labels):
            return False
        a, b = self.ignore, other.ignore
        if a is None and b is None:
            return True
        if a is None or b is None:
            return False
        return np.array_equal(a, b)


@dataclass
class MaskSequence:
    """Ordered frames sharing one object-id space."""

    name: str
    frames: list[MultiObjectMask]
    id_set: set[int] = field(default_factory=set)

    def __post_init__(self):
        if len(self.frames) < 2:
            raise MaskFormatError(
                f"sequence '{self.name}' needs >= 2 frames, got {len(self.frames)}"
            )
        first = self.frames[0]
        for i, frame in enumerate(self.frames):
            if (frame.height, frame.width) != (first.height, first.width):
                raise DimensionMismatchError(
                    f"sequence '{self.name}': frame {i} is "
                    f"{frame.width}x{frame.height}, frame 0 is "
                    f"{first.width}x{first.height}"
                )
        if not self.id_set:
            self.id_set = set().union(*(f.id_set() for f in self.frames))
        self.id_set.discard(0)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    def __len__(self) -> int:
        return len(self.frames)

    def object_ids(self) -> list[int]:
        return sorted(self.id_set)


def decode_mask(
    data: bytes, max_id: int = MAX_OBJECT_ID, void_id: int | None = None
) -> MultiObjectMask:
    """Decode a palette-indexed image into a mask.

    The image must be single-channel palette mode; the palette index of each
    pixel becomes its object id.  When `void_id` is given, pixels carrying it
    become background with the ignore flag set instead of failing the range
    check.
    """
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise MaskFormatError(f"not a decodable image: {exc}") from exc
    if img.mode != "P":
        raise MaskFormatError(
            f"expected a palette-indexed image, got mode '{img.mode}'"
        )
    labels = np.asarray(img, dtype=np.uint8)
    ignore = None
    if void_id is not None:
        ignore_px = labels == void_id
        if ignore_px.any():
            labels = labels.copy()
            labels[ignore_px] = 0
            ignore = ignore_px
    if labels.size and int(labels.max()) > max_id:
        raise LabelRangeError(
            f"mask contains id {int(labels.max())} above maximum {max_id}"
        )
    return MultiObjectMask(labels, ignore)


def encode_mask(mask: MultiObjectMask, max_id: int = MAX_OBJECT_ID) -> bytes:
    """Encode a mask as a palette-indexed PNG; inverse of `decode_mask`.

    Ids are written verbatim (no compaction).  Ignore pixels, when present,
    are written back as the reserved id 255.
    """
    labels = mask.labels
    if labels.size and int(labels.max()) > max_id:
        raise LabelRangeError(
            f"mask contains id {int(labels.max())} above maximum {max_id}"
        )
    if mask.ignore is not None and mask.ignore.any():
        labels = labels.copy()
        labels[mask.ignore] = RESERVED_ID
    img = Image.fromarray(labels, mode="P")
    img.putpalette(DAVIS_PALETTE)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


@dataclass
class DatasetIndex:
    """Root of a dataset tree plus the sequences of one split."""

    root: Path
    split: str
    sequences: list[tuple[str, int]]

    def sequence_names(self) -> list[str]:
        return [name for name, _ in self.sequences]

    def frame_count(self, name: str) -> int:
        for seq, count in self.sequences:
            if seq == name:
                return count
        raise DatasetLayoutError(f"sequence '{name}' not in split '{self.split}'")

    def annotation_dir(self, name: str) -> Path:
        return self.root / ANNOTATION_DIR / name

    def scribble_file(self, name: str) -> Path:
        return self.root / SCRIBBLE_DIR / name / "001.json"


def _frame_files(directory: Path, suffix: str) -> dict[int, Path]:
    """Map numeric frame index -> file, for `%05d.<suffix>` names."""
    out: dict[int, Path] = {}
    for path in directory.iterdir():
        m = _FRAME_RE.match(path.name)
        if m and path.name.endswith(suffix):
            out[int(m.group(1))] = path
    return out


def ordered_frame_files(directory: Path, sequence: str, suffix: str = "png") -> list[Path]:
    """Frame files ordered by numeric filename; gaps in 0..max raise."""
    if not directory.is_dir():
        raise DatasetLayoutError(f"no such sequence directory: {directory}")
    files = _frame_files(directory, suffix)
    if not files:
        raise DatasetLayoutError(f"no frame files under {directory}")
    top = max(files)
    missing = [i for i in range(top + 1) if i not in files]
    if missing:
        raise FrameGapError(sequence, missing)
    return [files[i] for i in range(top + 1)]


def index_dataset(root: str | Path, split: str) -> DatasetIndex:
    """Walk the dataset layout for one split and validate its shape.

    Expected tree::

        <root>/Annotations_unsupervised/480p/<seq>/00000.png ...
        <root>/JPEGImages/480p/<seq>/00000.jpg ...
        <root>/ImageSets/2019/<split>.txt

    Images are only counted, never decoded.
    """
    root = Path(root)
    split_file = root / IMAGESET_DIR / f"{split}.txt"
    if not split_file.is_file():
        raise DatasetLayoutError(f"missing split list: {split_file}")
    names = [line.strip() for line in split_file.read_text().splitlines() if line.strip()]
    if not names:
        raise DatasetLayoutError(f"split list is empty: {split_file}")
    sequences: list[tuple[str, int]] = []
    for name in names:
        ann = ordered_frame_files(root / ANNOTATION_DIR / name, name, "png")
        img_dir = root / IMAGE_DIR / name
        imgs = ordered_frame_files(img_dir, name, "jpg")
        if len(imgs) != len(ann):
            raise DatasetLayoutError(
                f"sequence '{name}': {len(ann)} annotations but {len(imgs)} images"
            )
        sequences.append((name, len(ann)))
    return DatasetIndex(root, split, sequences)


def load_frames(
    directory: Path,
    sequence: str,
    max_id: int = MAX_OBJECT_ID,
    void_id: int | None = None,
) -> MaskSequence:
    """Load every `%05d.png` under `directory` into a MaskSequence."""
    frames = []
    for path in ordered_frame_files(directory, sequence, "png"):
        frames.append(decode_mask(path.read_bytes(), max_id, void_id))
    return MaskSequence(sequence, frames)


def load_sequence(
    index: DatasetIndex,
    name: str,
    kind: str = "ground-truth",
    results_root: str | Path | None = None,
    void_id: int | None = None,
) -> MaskSequence:
    """Load one sequence's masks, either ground truth or submitted results.

    Ground truth comes from the dataset annotation tree; results come from
    `<results_root>/<name>/00000.png ...`.
    """
    if kind == "ground-truth":
        return load_frames(index.annotation_dir(name), name, void_id=void_id)
    if kind == "results":
        if results_root is None:
            raise ValueError("results_root is required for kind='results'")
        return load_frames(Path(results_root) / name, name)
    raise ValueError(f"kind must be 'ground-truth' or 'results', got {kind!r}")

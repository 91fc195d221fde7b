"""Deterministic synthetic dataset generator with analytically known scores.

Renders mini benchmark splits — axis-aligned rectangles and ellipses moving
with integer velocities — in the exact on-disk layout the mask loader expects,
and provides perturbations (shift / dropout / relabel) whose effect on the
metrics has a closed form.  Everything is integer arithmetic on purpose:
rendering twice with the same spec produces a byte-identical tree.
"""

from __future__ import annotations

import io
import json
import random
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import SceneSpecError
from .masks import (
    ANNOTATION_DIR,
    IMAGE_DIR,
    IMAGESET_DIR,
    MAX_OBJECT_ID,
    SCRIBBLE_DIR,
    DatasetIndex,
    MaskSequence,
    MultiObjectMask,
    encode_mask,
    index_dataset,
)
from .robot import robot_scribble

SHAPES = ("rectangle", "ellipse")
BUNDLED_SPECS = ("mini30",)


@dataclass(frozen=True)
class ObjectSpec:
    """One moving object: axis-aligned shape with integer geometry."""

    object_id: int
    shape: str
    size: tuple[int, int]  # (width, height) in pixels
    position: tuple[int, int]  # top-left (x, y) at frame 0
    velocity: tuple[int, int]  # (vx, vy) pixels per frame

    def __post_init__(self) -> None:
        if not 1 <= self.object_id <= MAX_OBJECT_ID:
            raise SceneSpecError(
                f"object id {self.object_id} outside 1..{MAX_OBJECT_ID}"
            )
        if self.shape not in SHAPES:
            raise SceneSpecError(f"unknown shape {self.shape!r}")
        w, h = self.size
        if w < 1 or h < 1:
            raise SceneSpecError(f"object {self.object_id}: non-positive size {self.size}")

    def bounds_at(self, frame: int) -> tuple[int, int, int, int]:
        """Return (x0, y0, x1, y1) of the bounding box at a frame (x1/y1 exclusive)."""
        x = self.position[0] + frame * self.velocity[0]
        y = self.position[1] + frame * self.velocity[1]
        return x, y, x + self.size[0], y + self.size[1]


@dataclass(frozen=True)
class SceneSpec:
    """One synthetic sequence: canvas, frame count, and its objects."""

    name: str
    width: int
    height: int
    frame_count: int
    objects: tuple[ObjectSpec, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.name:
            raise SceneSpecError("sequence name must be non-empty")
        if self.width < 1 or self.height < 1:
            raise SceneSpecError(f"{self.name}: non-positive canvas {self.width}x{self.height}")
        if self.frame_count < 2:
            raise SceneSpecError(f"{self.name}: at least 2 frames required")
        if not self.objects:
            raise SceneSpecError(f"{self.name}: at least one object required")
        ids = [o.object_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise SceneSpecError(f"{self.name}: duplicate object ids {ids}")
        for obj in self.objects:
            for t in (0, self.frame_count - 1):
                x0, y0, x1, y1 = obj.bounds_at(t)
                if x0 < 0 or y0 < 0 or x1 > self.width or y1 > self.height:
                    raise SceneSpecError(
                        f"{self.name}: object {obj.object_id} leaves the canvas "
                        f"at frame {t} (bbox {(x0, y0, x1, y1)})"
                    )


def _draw_object(labels: np.ndarray, obj: ObjectSpec, frame: int) -> None:
    x0, y0, x1, y1 = obj.bounds_at(frame)
    if obj.shape == "rectangle":
        labels[y0:y1, x0:x1] = obj.object_id
        return
    # Filled ellipse inscribed in the bounding box, decided in exact integer
    # arithmetic: (2(c-x0)-(w-1))^2 * h^2 + (2(r-y0)-(h-1))^2 * w^2 <= w^2 h^2.
    w, h = obj.size
    rows = np.arange(y0, y1).reshape(-1, 1)
    cols = np.arange(x0, x1).reshape(1, -1)
    dx = 2 * (cols - x0) - (w - 1)
    dy = 2 * (rows - y0) - (h - 1)
    inside = dx * dx * h * h + dy * dy * w * w <= w * w * h * h
    region = labels[y0:y1, x0:x1]
    region[inside] = obj.object_id


def render_frame(spec: SceneSpec, frame: int) -> MultiObjectMask:
    """Render one frame of a scene; later object ids overwrite earlier ones."""
    if not 0 <= frame < spec.frame_count:
        raise SceneSpecError(f"{spec.name}: frame {frame} outside 0..{spec.frame_count - 1}")
    labels = np.zeros((spec.height, spec.width), dtype=np.uint8)
    for obj in sorted(spec.objects, key=lambda o: o.object_id):
        _draw_object(labels, obj, frame)
    return MultiObjectMask(labels)


def render_sequence(spec: SceneSpec) -> MaskSequence:
    frames = [render_frame(spec, t) for t in range(spec.frame_count)]
    return MaskSequence(spec.name, frames)


def _write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _placeholder_jpeg(width: int, height: int, cache: dict[tuple[int, int], bytes]) -> bytes:
    key = (width, height)
    if key not in cache:
        buf = io.BytesIO()
        Image.new("L", (width, height), 128).save(buf, format="JPEG")
        cache[key] = buf.getvalue()
    return cache[key]


def _initial_scribbles(spec: SceneSpec, sequence: MaskSequence) -> dict:
    """Author round-0 scribbles: one full-object stroke set per object.

    Drawing against an empty prediction makes every object its own error
    region, so the robot's generator yields a foreground scribble per object.
    """
    frame = spec.frame_count // 2
    gt = sequence.frames[frame]
    scribbles = []
    for oid in sequence.object_ids():
        scribble = robot_scribble(
            MultiObjectMask(np.zeros_like(gt.labels)), gt, oid
        )
        scribble.frame = frame
        if scribble.paths:
            scribbles.append(scribble.to_dict())
    return {"sequence": spec.name, "scribbles": scribbles}


def render_dataset(specs: list[SceneSpec], out_root: Path, split: str) -> DatasetIndex:
    """Write a complete split tree (annotations, images, split list, scribbles).

    Idempotent: rendering the same specs twice produces byte-identical files.
    Returns the index of the freshly written tree.
    """
    out_root = Path(out_root)
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise SceneSpecError(f"duplicate sequence names in split {split!r}")
    jpeg_cache: dict[tuple[int, int], bytes] = {}
    for spec in sorted(specs, key=lambda s: s.name):
        sequence = render_sequence(spec)
        ann_dir = out_root / ANNOTATION_DIR / spec.name
        img_dir = out_root / IMAGE_DIR / spec.name
        for t, mask in enumerate(sequence.frames):
            _write_bytes(ann_dir / f"{t:05d}.png", encode_mask(mask))
            _write_bytes(
                img_dir / f"{t:05d}.jpg",
                _placeholder_jpeg(spec.width, spec.height, jpeg_cache),
            )
        store = _initial_scribbles(spec, sequence)
        _write_bytes(
            out_root / SCRIBBLE_DIR / spec.name / "001.json",
            (json.dumps(store, indent=2) + "\n").encode("ascii"),
        )
    listing = "".join(name + "\n" for name in sorted(names))
    _write_bytes(out_root / IMAGESET_DIR / f"{split}.txt", listing.encode("ascii"))
    return index_dataset(out_root, split)


# ---------------------------------------------------------------------------
# Perturbations with closed-form expected scores
# ---------------------------------------------------------------------------


def shift_sequence(gt: MaskSequence, dx: int, dy: int = 0) -> MaskSequence:
    """Translate every frame by (dx, dy) pixels, zero-filling the vacated band.

    Raises ValueError if any labeled pixel would leave the canvas — the
    closed-form J = (s-d)/(s+d) for a size-s square only holds in-bounds.
    """
    frames = []
    for i, mask in enumerate(gt.frames):
        src = mask.labels
        moved = np.zeros_like(src)
        h, w = src.shape
        ys = slice(max(dy, 0), min(h + dy, h))
        xs = slice(max(dx, 0), min(w + dx, w))
        src_ys = slice(max(-dy, 0), min(h - dy, h))
        src_xs = slice(max(-dx, 0), min(w - dx, w))
        moved[ys, xs] = src[src_ys, src_xs]
        if np.count_nonzero(moved) != np.count_nonzero(src):
            raise ValueError(
                f"shift ({dx}, {dy}) pushes labels out of bounds at frame {i}"
            )
        frames.append(MultiObjectMask(moved))
    return MaskSequence(gt.name, frames)


def dropout_sequence(gt: MaskSequence, p: float, seed: int = 0) -> MaskSequence:
    """Remove whole objects, each independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"dropout probability {p} outside [0, 1]")
    rng = random.Random(seed)
    dropped = {oid for oid in gt.object_ids() if rng.random() < p}
    frames = []
    for mask in gt.frames:
        labels = mask.labels.copy()
        for oid in dropped:
            labels[labels == oid] = 0
        frames.append(MultiObjectMask(labels))
    return MaskSequence(gt.name, frames)


def relabel_sequence(gt: MaskSequence, perm: dict[int, int]) -> MaskSequence:
    """Rename object ids by a permutation; unsupervised scores are invariant."""
    missing = gt.id_set - set(perm)
    if missing:
        raise ValueError(f"permutation missing ids {sorted(missing)}")
    targets = list(perm.values())
    if len(set(targets)) != len(targets):
        raise ValueError("permutation is not injective")
    for new in targets:
        if not 1 <= new <= MAX_OBJECT_ID:
            raise ValueError(f"permuted id {new} outside 1..{MAX_OBJECT_ID}")
    table = np.arange(256, dtype=np.uint8)
    for old, new in perm.items():
        table[old] = new
    frames = [MultiObjectMask(table[mask.labels]) for mask in gt.frames]
    return MaskSequence(gt.name, frames)


def perturb(gt: MaskSequence, mode: str, **params) -> MaskSequence:
    """Dispatch to a named perturbation: shift(dx[, dy]) | dropout(p[, seed]) | relabel(perm)."""
    if mode == "shift":
        return shift_sequence(gt, **params)
    if mode == "dropout":
        return dropout_sequence(gt, **params)
    if mode == "relabel":
        return relabel_sequence(gt, **params)
    raise ValueError(f"unknown perturbation mode {mode!r}")


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------


def scene_to_dict(spec: SceneSpec) -> dict:
    return {
        "name": spec.name,
        "width": spec.width,
        "height": spec.height,
        "frames": spec.frame_count,
        "seed": spec.seed,
        "objects": [
            {
                "id": o.object_id,
                "shape": o.shape,
                "size": list(o.size),
                "position": list(o.position),
                "velocity": list(o.velocity),
            }
            for o in spec.objects
        ],
    }


def scene_from_dict(data: dict) -> SceneSpec:
    try:
        objects = tuple(
            ObjectSpec(
                object_id=int(o["id"]),
                shape=str(o["shape"]),
                size=(int(o["size"][0]), int(o["size"][1])),
                position=(int(o["position"][0]), int(o["position"][1])),
                velocity=(int(o["velocity"][0]), int(o["velocity"][1])),
            )
            for o in data["objects"]
        )
        return SceneSpec(
            name=str(data["name"]),
            width=int(data["width"]),
            height=int(data["height"]),
            frame_count=int(data["frames"]),
            objects=objects,
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, IndexError, TypeError) as exc:
        raise SceneSpecError(f"malformed scene entry: {exc!r}") from exc


def write_scene_file(path: Path, split: str, specs: list[SceneSpec]) -> None:
    payload = {"split": split, "sequences": [scene_to_dict(s) for s in specs]}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="ascii")


def load_scene_file(path: Path) -> tuple[str, list[SceneSpec]]:
    """Read a scene file; bundled spec names (e.g. ``mini30``) resolve internally."""
    name = str(path)
    if name in BUNDLED_SPECS:
        text = (
            resources.files("vosbench").joinpath(f"specs/{name}.json").read_text("ascii")
        )
    else:
        try:
            text = Path(path).read_text(encoding="ascii")
        except OSError as exc:
            raise SceneSpecError(f"cannot read scene file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneSpecError(f"scene file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "split" not in data or "sequences" not in data:
        raise SceneSpecError(f"scene file {path} must carry 'split' and 'sequences'")
    specs = [scene_from_dict(entry) for entry in data["sequences"]]
    if not specs:
        raise SceneSpecError(f"scene file {path} lists no sequences")
    return str(data["split"]), specs


# ---------------------------------------------------------------------------
# The bundled 30-sequence mini split
# ---------------------------------------------------------------------------

MINI30_SPLIT = "mini30"
_MINI30_SEED = 20190301


def make_mini_split(seed: int = _MINI30_SEED) -> list[SceneSpec]:
    """Build the 30-sequence mini split: 96x64, 10 frames, 1-4 objects each.

    Objects live in disjoint 16-row horizontal bands with vertical velocity 0,
    so they can never overlap or collide; all geometry is integral.
    """
    rng = random.Random(seed)
    specs = []
    for i in range(30):
        width, height, frames = 96, 64, 10
        count = i % 4 + 1
        objects = []
        for k in range(count):
            band_top = 16 * k
            shape = SHAPES[(i + k) % 2]
            w = rng.randrange(6, 14)
            h = rng.randrange(4, 13)
            vx = rng.randrange(-2, 3)
            span = (frames - 1) * vx
            lo, hi = max(0, -span), min(width - w, width - w - span)
            x = rng.randrange(lo, hi + 1)
            y = band_top + rng.randrange(0, 16 - h + 1)
            objects.append(
                ObjectSpec(
                    object_id=k + 1,
                    shape=shape,
                    size=(w, h),
                    position=(x, y),
                    velocity=(vx, 0),
                )
            )
        specs.append(
            SceneSpec(
                name=f"mini-{i:03d}",
                width=width,
                height=height,
                frame_count=frames,
                objects=tuple(objects),
                seed=seed,
            )
        )
    return specs

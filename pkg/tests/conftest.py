"""Shared fixtures: tiny analytic scenes and a rendered mini dataset."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from vosbench.masks import DatasetIndex, MaskSequence, MultiObjectMask
from vosbench.synth import ObjectSpec, SceneSpec, load_scene_file, render_dataset


def square_mask(height: int, width: int, top: int, left: int, side: int, oid: int = 1) -> MultiObjectMask:
    labels = np.zeros((height, width), dtype=np.uint8)
    labels[top : top + side, left : left + side] = oid
    return MultiObjectMask(labels)


def static_square_scene(name: str = "square", side: int = 10, frames: int = 4) -> SceneSpec:
    return SceneSpec(
        name=name,
        width=40,
        height=30,
        frame_count=frames,
        objects=(ObjectSpec(1, "rectangle", (side, side), (5, 10), (0, 0)),),
    )


def two_object_scene(name: str = "pair") -> SceneSpec:
    return SceneSpec(
        name=name,
        width=64,
        height=48,
        frame_count=5,
        objects=(
            ObjectSpec(1, "rectangle", (10, 8), (4, 4), (1, 0)),
            ObjectSpec(2, "ellipse", (12, 9), (4, 30), (2, 0)),
        ),
    )


@pytest.fixture(scope="session")
def mini_index(tmp_path_factory: pytest.TempPathFactory) -> DatasetIndex:
    """The bundled 30-sequence split rendered once per test session."""
    root = tmp_path_factory.mktemp("mini30")
    split, specs = load_scene_file("mini30")
    return render_dataset(specs, root, split)


@pytest.fixture(scope="session")
def small_index(tmp_path_factory: pytest.TempPathFactory) -> DatasetIndex:
    """A 2-sequence split that is cheap enough for per-test servers."""
    root = tmp_path_factory.mktemp("small")
    specs = [static_square_scene("alpha", frames=6), two_object_scene("beta")]
    return render_dataset(specs, root, "small")


def sequence_payload(gt: MaskSequence) -> list[dict]:
    """RLE frame entries for a wire submission equal to `gt`."""
    from vosbench.wire import rle_encode

    return [
        {
            "index": i,
            "rle": rle_encode(frame.labels),
            "width": gt.width,
            "height": gt.height,
        }
        for i, frame in enumerate(gt.frames)
    ]

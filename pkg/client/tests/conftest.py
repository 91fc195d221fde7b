"""Fixtures that run the evaluation service as a real subprocess.

The service is exercised exclusively through its public surface: the
``vosbench`` CLI renders a synthetic split and serves it over HTTP, and the
tests read ground truth straight from the rendered annotation PNGs.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import requests
from PIL import Image

SPLIT = "tiny"
SCENES = {
    "split": SPLIT,
    "sequences": [
        {
            "name": "echo",
            "width": 48,
            "height": 32,
            "frames": 5,
            "seed": 0,
            "objects": [
                {"id": 1, "shape": "rectangle", "size": [8, 6], "position": [2, 2], "velocity": [1, 0]},
                {"id": 2, "shape": "ellipse", "size": [10, 8], "position": [30, 20], "velocity": [-1, 0]},
            ],
        },
        {
            "name": "lone",
            "width": 24,
            "height": 20,
            "frames": 4,
            "seed": 0,
            "objects": [
                {"id": 1, "shape": "rectangle", "size": [6, 6], "position": [4, 4], "velocity": [2, 0]},
            ],
        },
    ],
}


def _cli() -> list[str]:
    exe = shutil.which("vosbench")
    if exe:
        return [exe]
    return [sys.executable, "-m", "vosbench.cli"]


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("served-data")
    scene_file = root / "scenes.json"
    scene_file.write_text(json.dumps(SCENES))
    out = root / "data"
    subprocess.run(
        _cli() + ["synth", "--spec", str(scene_file), "--out", str(out)],
        check=True,
        capture_output=True,
        text=True,
    )
    return out


def load_gt(root: Path, name: str) -> list[np.ndarray]:
    """Ground-truth label grids straight from the rendered annotation PNGs."""
    ann = root / "Annotations_unsupervised" / "480p" / name
    frames = [np.array(Image.open(path)) for path in sorted(ann.glob("*.png"))]
    assert frames, f"no annotations for {name} under {ann}"
    return frames


class ServerFactory:
    def __init__(self, root: Path):
        self.root = root
        self.processes: list[subprocess.Popen] = []

    def launch(self, budget_scale: float) -> str:
        process = subprocess.Popen(
            _cli()
            + [
                "serve",
                "--davis-root",
                str(self.root),
                "--split",
                SPLIT,
                "--port",
                "0",
                "--budget-scale",
                str(budget_scale),
            ],
            stderr=subprocess.PIPE,
            text=True,
        )
        self.processes.append(process)
        port = None
        deadline = time.monotonic() + 30
        while time.monotonic() < deadline:
            line = process.stderr.readline()
            if not line:
                if process.poll() is not None:
                    raise RuntimeError(f"server exited early with {process.returncode}")
                time.sleep(0.05)
                continue
            event = json.loads(line)
            if event.get("event") == "serving":
                port = event["port"]
                break
        if port is None:
            raise RuntimeError("server never announced its port")
        base = f"http://127.0.0.1:{port}"
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            try:
                if requests.get(f"{base}/health", timeout=2).status_code == 200:
                    return base
            except requests.RequestException:
                time.sleep(0.05)
        raise RuntimeError("server never became healthy")

    def shutdown(self) -> None:
        for process in self.processes:
            process.terminate()
        for process in self.processes:
            try:
                process.wait(timeout=10)
            except subprocess.TimeoutExpired:
                process.kill()


@pytest.fixture(scope="session")
def server_factory(dataset_root):
    factory = ServerFactory(dataset_root)
    try:
        yield factory
    finally:
        factory.shutdown()


@pytest.fixture(scope="session")
def server(server_factory) -> str:
    """An untimed service instance (budget disabled)."""
    return server_factory.launch(0.0)

"""Command-line entry point: evaluate, validate-dataset, serve, synth.

Human-facing results go to standard output as percentage tables with one
decimal; machine-facing diagnostics go to standard error as one JSON object
per line.  Exit codes: 0 success, 1 I/O failure, 2 rejected input
(validation failure, bad spec, usage error).
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal
from pathlib import Path

from .errors import SceneSpecError, VosbenchError
from .evaluate import DEFAULT_MAX_PROPOSALS, TASKS, evaluate_split
from .masks import DatasetIndex, index_dataset, load_sequence
from .reports import (
    format_table,
    round_half_away,
    write_global_csv,
    write_json,
    write_per_object_csv,
)
from .robot import InteractiveService
from .server import make_server
from .synth import load_scene_file, render_dataset

# Expected statistics for the official splits; means are kept as strings so
# their printed precision (one vs two decimals) is part of the expectation.
OFFICIAL_SPLITS = {
    "train": {
        "sequences": 60,
        "frames": 4209,
        "mean_frames": "70.2",
        "objects": 150,
        "mean_objects": "2.4",
    },
    "val": {
        "sequences": 30,
        "frames": 1999,
        "mean_frames": "66.6",
        "objects": 66,
        "mean_objects": "2.2",
    },
    "test-dev": {
        "sequences": 30,
        "frames": 2294,
        "mean_frames": "76.46",
        "objects": 115,
        "mean_objects": "3.83",
    },
    "test-challenge": {
        "sequences": 30,
        "frames": 2229,
        "mean_frames": "74.3",
        "objects": 118,
        "mean_objects": "3.93",
    },
}


def _diag(record: dict) -> None:
    print(json.dumps(record), file=sys.stderr, flush=True)


def _mean_matches(actual: float, expected: str) -> bool:
    """Compare a computed mean against its printed form.

    Published tables mix rounding and plain truncation at the printed
    precision, so either rendering of the computed mean counts as a match.
    """
    want = Decimal(expected)
    digits = -want.as_tuple().exponent
    rounded = Decimal(repr(round_half_away(actual, digits)))
    quantum = Decimal(1).scaleb(-digits)
    truncated = (Decimal(repr(actual)) // quantum) * quantum
    return want in (rounded.normalize(), truncated.normalize(), rounded, truncated)


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        index = index_dataset(Path(args.davis_root), args.split)
    except (VosbenchError, OSError) as exc:
        _diag({"event": "dataset-error", "detail": str(exc)})
        return 1
    try:
        validation, report = evaluate_split(
            index,
            Path(args.results),
            args.task,
            max_proposals=args.max_proposals,
            jobs=args.jobs,
            void_id=args.void_id,
        )
    except OSError as exc:
        _diag({"event": "io-error", "detail": str(exc)})
        return 1
    if not validation.ok:
        for entry in validation.failures():
            _diag({"sequence": entry.name, "reasons": entry.reasons})
        first = validation.failures()[0]
        print(f"validation failed: {first.name}: {first.reasons[0]}", file=sys.stderr)
        return 2
    assert report is not None
    if args.output is not None:
        out = Path(args.output)
        try:
            out.mkdir(parents=True, exist_ok=True)
            if args.format == "csv":
                write_global_csv(report, out / "global.csv")
                write_per_object_csv(report, out / "per_object.csv")
            else:
                write_json(report, out / "report.json")
        except OSError as exc:
            _diag({"event": "io-error", "detail": str(exc)})
            return 1
    print(format_table(report))
    return 0


# ---------------------------------------------------------------------------
# validate-dataset
# ---------------------------------------------------------------------------


def _dataset_stats(index: DatasetIndex) -> dict:
    names = index.sequence_names()
    frames = sum(index.frame_count(n) for n in names)
    objects = 0
    for name in names:
        objects += len(load_sequence(index, name).id_set)
    return {
        "split": index.split,
        "sequences": len(names),
        "frames": frames,
        "mean_frames": frames / len(names),
        "objects": objects,
        "mean_objects": objects / len(names),
    }


def cmd_validate_dataset(args: argparse.Namespace) -> int:
    try:
        index = index_dataset(Path(args.davis_root), args.split)
        stats = _dataset_stats(index)
    except (VosbenchError, OSError) as exc:
        _diag({"event": "dataset-error", "detail": str(exc)})
        return 1
    print(
        f"split {stats['split']}: {stats['sequences']} sequences, "
        f"{stats['frames']} frames, {stats['mean_frames']:.2f} frames/sequence, "
        f"{stats['objects']} objects, {stats['mean_objects']:.2f} objects/sequence"
    )
    expected = OFFICIAL_SPLITS.get(args.split)
    if expected is None:
        print(f"no expected statistics for split '{args.split}'; comparison skipped")
        return 0
    checks = [
        ("sequences", stats["sequences"] == expected["sequences"], expected["sequences"]),
        ("frames", stats["frames"] == expected["frames"], expected["frames"]),
        (
            "mean frames/sequence",
            _mean_matches(stats["mean_frames"], expected["mean_frames"]),
            expected["mean_frames"],
        ),
        ("objects", stats["objects"] == expected["objects"], expected["objects"]),
        (
            "mean objects/sequence",
            _mean_matches(stats["mean_objects"], expected["mean_objects"]),
            expected["mean_objects"],
        ),
    ]
    failed = False
    for label, ok, want in checks:
        print(f"  {label}: expected {want} -> {'PASS' if ok else 'FAIL'}")
        failed = failed or not ok
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        index = index_dataset(Path(args.davis_root), args.split)
    except (VosbenchError, OSError) as exc:
        _diag({"event": "dataset-error", "detail": str(exc)})
        return 1
    missing = [
        name
        for name in index.sequence_names()
        if not index.scribble_file(name).is_file()
    ]
    if missing:
        _diag({"event": "scribbles-missing", "sequences": missing})
    service = InteractiveService(index, budget_scale=args.budget_scale)
    try:
        server = make_server(service, args.host, args.port)
    except OSError as exc:
        _diag({"event": "bind-error", "detail": str(exc)})
        return 1
    _diag(
        {
            "event": "serving",
            "host": args.host,
            "port": server.server_port,
            "split": args.split,
            "budget_scale": service.budget_scale,
        }
    )
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    try:
        split, specs = load_scene_file(args.spec)
        index = render_dataset(specs, Path(args.out), split)
    except SceneSpecError as exc:
        _diag({"event": "spec-error", "detail": str(exc)})
        return 2
    except (VosbenchError, OSError) as exc:
        _diag({"event": "io-error", "detail": str(exc)})
        return 1
    names = index.sequence_names()
    frames = sum(index.frame_count(n) for n in names)
    print(f"wrote split '{split}': {len(names)} sequences, {frames} frames at {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_int(value: str) -> int:
    parsed = int(value)
    if parsed < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return parsed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vosbench",
        description="Multi-object video segmentation benchmark toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="score a submission against a split")
    ev.add_argument("--task", required=True, choices=TASKS)
    ev.add_argument("--davis-root", required=True, help="dataset root directory")
    ev.add_argument("--results", required=True, help="submission root directory")
    ev.add_argument("--split", required=True)
    ev.add_argument("--max-proposals", type=_positive_int, default=DEFAULT_MAX_PROPOSALS)
    ev.add_argument("--output", default=None, help="directory for report files")
    ev.add_argument("--format", choices=("csv", "json"), default="csv")
    ev.add_argument("--jobs", type=_positive_int, default=1)
    ev.add_argument(
        "--void-id",
        type=int,
        default=None,
        help="ground-truth label treated as unscored void region (e.g. 255)",
    )
    ev.set_defaults(func=cmd_evaluate)

    vd = sub.add_parser("validate-dataset", help="check a split against expected statistics")
    vd.add_argument("--davis-root", required=True)
    vd.add_argument("--split", required=True)
    vd.set_defaults(func=cmd_validate_dataset)

    sv = sub.add_parser("serve", help="run the interactive-track service")
    sv.add_argument("--davis-root", required=True)
    sv.add_argument("--split", required=True)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8080, help="0 picks a free port")
    sv.add_argument(
        "--budget-scale",
        type=float,
        default=None,
        help="scales the 30s-per-object round budget; <= 0 disables it",
    )
    sv.set_defaults(func=cmd_serve)

    sy = sub.add_parser("synth", help="render a synthetic split from a scene file")
    sy.add_argument("--spec", required=True, help="scene file path or bundled name (mini30)")
    sy.add_argument("--out", required=True, help="output dataset root")
    sy.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

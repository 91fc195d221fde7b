"""Report serialization: CSV, JSON mirror, and the stdout summary table.

Scores are stored in memory as unit-interval doubles; every serialized form
carries percentages.  The CSV/JSON files keep full precision (so byte
comparison across runs is meaningful); only the stdout table rounds, to one
decimal, half away from zero.
"""

from __future__ import annotations

import csv
import json
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .evaluate import DatasetReport, ObjectRow

PER_OBJECT_HEADER = [
    "sequence",
    "object_id",
    "matched_id",
    "J_mean",
    "J_recall",
    "J_decay",
    "F_mean",
    "F_recall",
    "F_decay",
    "JF_mean",
]
GLOBAL_HEADER = ["JF", "J_mean", "J_recall", "J_decay", "F_mean", "F_recall", "F_decay"]


def round_half_away(x: float, digits: int = 1) -> float:
    """Round to `digits` decimals, halves away from zero (41.25 -> 41.3)."""
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def percent(x: float) -> float:
    return x * 100.0


def _global_values(report: DatasetReport) -> list[float]:
    g = report.overall
    return [percent(v) for v in (g.jf, g.j_mean, g.j_recall, g.j_decay, g.f_mean, g.f_recall, g.f_decay)]


def _row_values(row: ObjectRow) -> list[float]:
    return [
        percent(v)
        for v in (
            row.j.mean,
            row.j.recall,
            row.j.decay,
            row.f.mean,
            row.f.recall,
            row.f.decay,
            row.jf_mean,
        )
    ]


def write_per_object_csv(report: DatasetReport, path: str | Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PER_OBJECT_HEADER)
        for row in report.rows():
            matched = "" if row.matched_id is None else str(row.matched_id)
            writer.writerow(
                [row.sequence, str(row.object_id), matched]
                + [repr(v) for v in _row_values(row)]
            )


def write_global_csv(report: DatasetReport, path: str | Path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GLOBAL_HEADER)
        writer.writerow([repr(v) for v in _global_values(report)])


def report_as_dict(report: DatasetReport) -> dict:
    """JSON-ready mirror carrying the same numbers as the CSV files."""
    g = dict(zip(GLOBAL_HEADER, _global_values(report)))
    sequences = []
    for seq in report.sequences:
        objects = []
        for row in sorted(seq.rows, key=lambda r: r.object_id):
            values = _row_values(row)
            objects.append(
                {
                    "object_id": row.object_id,
                    "matched_id": row.matched_id,
                    "J_mean": values[0],
                    "J_recall": values[1],
                    "J_decay": values[2],
                    "F_mean": values[3],
                    "F_recall": values[4],
                    "F_decay": values[5],
                    "JF_mean": values[6],
                }
            )
        sequences.append({"name": seq.name, "objects": objects})
    return {
        "split": report.split,
        "task": report.task,
        "global": g,
        "sequences": sequences,
    }


def write_json(report: DatasetReport, path: str | Path):
    with open(path, "w") as fh:
        json.dump(report_as_dict(report), fh, indent=2)
        fh.write("\n")


def format_table(report: DatasetReport) -> str:
    """Headline summary in the challenge's table style (percent, 1 decimal)."""
    values = [round_half_away(v) for v in _global_values(report)]
    header = ["J&F", "J Mean", "J Recall", "J Decay", "F Mean", "F Recall", "F Decay"]
    cells = [f"{v:.1f}" for v in values]
    widths = [max(len(h), len(c)) for h, c in zip(header, cells)]
    line1 = "  ".join(h.rjust(w) for h, w in zip(header, widths))
    line2 = "  ".join(c.rjust(w) for c, w in zip(cells, widths))
    return f"{report.task} / {report.split}\n{line1}\n{line2}"

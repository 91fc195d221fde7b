"""Report serialization: full-precision storage, 1-decimal display."""

from __future__ import annotations

import csv
import json

from vosbench.evaluate import (
    DatasetReport,
    ObjectRow,
    SequenceResult,
    aggregate,
)
from vosbench.metrics import MetricTriple
from vosbench.reports import (
    GLOBAL_HEADER,
    PER_OBJECT_HEADER,
    format_table,
    round_half_away,
    write_global_csv,
    write_json,
    write_per_object_csv,
)


def _report() -> DatasetReport:
    third = MetricTriple(mean=1 / 3, recall=0.5, decay=-0.05)
    perfect = MetricTriple(mean=1.0, recall=1.0, decay=0.0)
    rows = [
        SequenceResult("a", [ObjectRow("a", 1, 2, third, perfect)]),
        SequenceResult("b", [ObjectRow("b", 1, None, perfect, perfect)]),
    ]
    return aggregate(rows, "tiny", "unsupervised")


# -- rounding ---------------------------------------------------------------


def test_round_half_away_rounds_halves_up():
    assert round_half_away(41.25) == 41.3
    assert round_half_away(41.24) == 41.2
    assert round_half_away(0.05) == 0.1
    assert round_half_away(70.15) == 70.2


def test_round_half_away_is_away_from_zero_for_negatives():
    assert round_half_away(-0.05) == -0.1
    assert round_half_away(-0.04) == -0.0


def test_round_half_away_avoids_binary_float_artifacts():
    # 2.675 is stored as 2.67499...; decimal-string rounding must still see 2.675
    assert round_half_away(2.675, 2) == 2.68


# -- CSV --------------------------------------------------------------------


def test_global_csv_holds_full_precision_percent(tmp_path):
    report = _report()
    path = tmp_path / "global.csv"
    write_global_csv(report, path)
    with open(path, newline="") as fh:
        reader = list(csv.reader(fh))
    assert reader[0] == GLOBAL_HEADER
    values = reader[1]
    assert values[0] == repr(report.overall.jf * 100.0)
    assert values[1] == repr(report.overall.j_mean * 100.0)
    # full precision: mean of 1/3 and 1.0 keeps all digits
    assert values[1] == repr((1 / 3 + 1.0) / 2 * 100.0)


def test_per_object_csv_rows_and_blank_unmatched(tmp_path):
    report = _report()
    path = tmp_path / "per_object.csv"
    write_per_object_csv(report, path)
    with open(path, newline="") as fh:
        reader = list(csv.reader(fh))
    assert reader[0] == PER_OBJECT_HEADER
    assert len(reader) == 3
    a_row = reader[1]
    assert a_row[0] == "a" and a_row[1] == "1" and a_row[2] == "2"
    assert a_row[3] == repr(1 / 3 * 100.0)
    b_row = reader[2]
    assert b_row[2] == ""  # no matched proposal


def test_csv_writes_are_deterministic(tmp_path):
    report = _report()
    write_per_object_csv(report, tmp_path / "one.csv")
    write_per_object_csv(report, tmp_path / "two.csv")
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


# -- JSON -------------------------------------------------------------------


def test_json_report_structure(tmp_path):
    report = _report()
    path = tmp_path / "report.json"
    write_json(report, path)
    text = path.read_text()
    assert text.endswith("\n")
    data = json.loads(text)
    assert data["split"] == "tiny"
    assert data["task"] == "unsupervised"
    assert set(data["global"]) == set(GLOBAL_HEADER)
    assert data["global"]["J_mean"] == (1 / 3 + 1.0) / 2 * 100.0
    sequences = {s["name"]: s for s in data["sequences"]}
    assert sequences["a"]["objects"][0]["matched_id"] == 2
    assert sequences["b"]["objects"][0]["matched_id"] is None


# -- table ------------------------------------------------------------------


def test_format_table_shows_percent_with_one_decimal():
    table = format_table(_report())
    lines = table.splitlines()
    assert lines[0] == "unsupervised / tiny"
    assert lines[1].split() == [
        "J&F",
        "J",
        "Mean",
        "J",
        "Recall",
        "J",
        "Decay",
        "F",
        "Mean",
        "F",
        "Recall",
        "F",
        "Decay",
    ]
    # overall J&F = mean of (1/3+1)/2 and 1 = 83.33..% -> printed 83.3
    assert "83.3" in lines[2]
    assert "66.7" in lines[2]  # J mean percent of (1/3+1)/2

from __future__ import annotations

import json
from pathlib import Path

import pytest

from whitham.cli import SchemaError, main, parse_curve_document

DATA = Path(__file__).resolve().parent.parent / "data"


def _report(out: Path) -> dict:
    return json.loads((out / "report.json").read_text())


def test_schema_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"poly": [1, 2], "marked_points": [{"x": "a", "order": 0}]}))
    assert main(["periods", "--input", str(bad), "--out", str(tmp_path / "o")]) == 2
    rep = _report(tmp_path / "o")
    assert rep["error"] == "schema" and len(rep["problems"]) >= 2


def test_missing_input_exit_2(tmp_path):
    assert main(["realnorm", "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_3(tmp_path):
    doc = tmp_path / "nodal.json"
    doc.write_text(json.dumps({"poly": [0, 0, -1, 1], "marked_points": []}))
    assert main(["periods", "--input", str(doc), "--out", str(tmp_path)]) == 3


def test_default_residues():
    _, parts = parse_curve_document(
        {"poly": [-1, 0, 0, 0, 0, 1], "marked_points": [{"x": 0.5, "order": 1}, {"x": [0, 1], "order": 1}]}
    )
    assert [p.residue for p in parts] == [1j, -1j]
    with pytest.raises(SchemaError):
        parse_curve_document({"poly": [-1, 0, 0, 0, 0, 1], "marked_points": [{"x": 0.5, "order": 1}]})


def test_periods_report(tmp_path):
    assert main(["periods", "--input", str(DATA / "genus1_second_kind.json"), "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path)
    assert rep["schema"] == "v1" and rep["command"] == "periods"
    tau = rep["result"]["tau"][0][0]
    assert abs(complex(*tau) - 1j) < 1e-8


@pytest.mark.parametrize(
    "argv",
    [
        ["realnorm", "--input", str(DATA / "genus2_third_kind.json")],
        ["degenerate", "--kind", "3", "--t-list", "0.1,0.05"],
        ["leaf-trace", "--input", str(DATA / "genus1_rank.json"), "--steps", "2"],
    ],
)
def test_reports_reproduce_bit_for_bit(tmp_path, argv):
    out = tmp_path / "o"
    assert main(argv + ["--out", str(out), "--seed", "4"]) == 0
    first = [(out / n).read_bytes() for n in sorted(p.name for p in out.iterdir())]
    assert main(argv + ["--out", str(out), "--seed", "4"]) == 0
    second = [(out / n).read_bytes() for n in sorted(p.name for p in out.iterdir())]
    assert first == second


def test_selftest(tmp_path, capsys):
    assert main(["selftest", "--out", str(tmp_path)]) == 0
    assert _report(tmp_path)["result"]["all_passed"]
    assert "[FAIL]" not in capsys.readouterr().out

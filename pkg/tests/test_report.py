from __future__ import annotations

import xml.etree.ElementTree as ET

import pytest

from abc_verdict.abc import KNearest
from abc_verdict.experiments import ExperimentSpec, run_experiment
from abc_verdict.report import (
    ExperimentReport,
    InvariantViolation,
    emit_outputs,
    parse_report_csv,
    report_to_csv,
    report_to_svg,
    verify_footer,
)

SPECS = [
    ExperimentSpec("fig1", reps=15),
    ExperimentSpec("lemma-convergence", reps=2, n_grid=(10, 100)),
    ExperimentSpec("normal-discrepancy", reps=15),
    ExperimentSpec("abc-vs-exact", reps=4, table_size=2000, rule=KNearest(40)),
    ExperimentSpec("false-alloc", reps=6),
]


def _sum_agg(rows):
    return {"total": sum(r["x"] for r in rows), "count": len(rows)}


def test_empty_report_is_header_only(tmp_path):
    report = ExperimentReport("empty", ["a", "b"], [], _sum_agg)
    (path,) = emit_outputs(report, tmp_path)
    assert path.read_text() == "a,b\n"


def test_footer_round_trip():
    rows = [{"x": 0.1, "y": "p"}, {"x": 0.2, "y": None}]
    report = ExperimentReport("t", ["x", "y"], rows, _sum_agg)
    text = report_to_csv(report)
    assert text == "x,y\n0.10000000000000001,p\n0.20000000000000001,\n# total=0.30000000000000004\n# count=2\n"
    cols, parsed, footer = parse_report_csv(text)
    assert parsed == [{"x": 0.1, "y": "p"}, {"x": 0.2, "y": None}]
    verify_footer(report, text)
    with pytest.raises(InvariantViolation):
        verify_footer(report, text.replace("total=0.30000000000000004", "total=0.3"))


def test_factorization_guard():
    row = {"log_b12": 1.0, "log_beta": 0.25, "log_g": 0.75 + 1e-6}
    report = ExperimentReport("bad", list(row), [row])
    with pytest.raises(InvariantViolation) as info:
        report_to_csv(report)
    assert info.value.invariant == "factorization"
    row["log_g"] = 0.75
    report_to_csv(report)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.experiment)
def test_outputs(spec, tmp_path):
    report = run_experiment(spec)
    paths = emit_outputs(report, tmp_path, plot=True)
    assert [p.name for p in paths] == [f"{spec.experiment}.csv", f"{spec.experiment}.svg"]
    text = paths[0].read_text()
    verify_footer(report, text)
    root = ET.parse(paths[1]).getroot()
    markers = [e for e in root.iter() if e.get("class") == "marker"]
    assert len(markers) == sum(
        1 for r in report.rows if r[report.plot["x"]] is not None
        and (report.plot.get("hist") or r[report.plot["y"]] is not None)
    )
    labels = [e.text for e in root.iter("{http://www.w3.org/2000/svg}text")]
    assert report.plot["xlabel"] in labels
    again = tmp_path / "again"
    emit_outputs(run_experiment(spec), again, plot=True)
    assert (again / paths[0].name).read_bytes() == paths[0].read_bytes()
    assert (again / paths[1].name).read_bytes() == paths[1].read_bytes()


def test_svg_one_marker_per_row_in_scatter():
    rows = [{"x": float(i), "y": float(i * i), "g": i % 2} for i in range(25)]
    report = ExperimentReport("s", ["x", "y", "g"], rows, plot=dict(x="x", y="y", split="g", xlabel="a<b",
                                                                         ylabel="y"))
    root = ET.fromstring(report_to_svg(report).encode())
    assert sum(e.get("class") == "marker" for e in root.iter()) == 25


def test_unwritable_output_reports_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    report = ExperimentReport("t", ["x"], [{"x": 1.0}])
    with pytest.raises(OSError, match="file"):
        emit_outputs(report, blocker / "sub")

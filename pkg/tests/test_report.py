import json
from pathlib import Path

from kittisim.evaluation.metrics import evaluate
from kittisim.evaluation.report import (
    format_ap_table,
    format_recall_table,
    load_reference_results,
    pr_curve_csv,
    pr_curve_svg,
    reference_ap_table,
    reference_recall_table,
    report_ap_rows,
    report_recall_rows,
    write_report_files,
)
from test_metrics import build_dataset, mixed_gt_frames, with_scores

GOLDEN = Path(__file__).parent / "data" / "golden"


def test_reference_fixture_has_published_shape():
    ref = load_reference_results()
    assert len(ref["ap"]["methods"]) == 6
    assert ref["ap"]["columns"] == ["Easy", "Moderate", "Hard"]
    assert len(ref["recall"]["methods"]) == 3
    assert ref["recall"]["thresholds"] == ["0.30", "0.50"]
    pv = next(m for m in ref["ap"]["methods"] if m["name"] == "PV-RCNN")
    assert pv["ap11"][0] == "89.7738"
    second = next(m for m in ref["recall"]["methods"] if m["name"] == "SECOND")
    assert second["0.30"] == ["0.515", "0.5158"]


def test_reference_tables_match_golden():
    assert reference_ap_table() == (GOLDEN / "reference_ap_table.txt").read_text()
    assert reference_recall_table() == (GOLDEN / "reference_recall_table.txt").read_text()


def test_identity_report_tables_match_golden(tmp_path):
    frames = mixed_gt_frames()
    build_dataset(tmp_path, frames)
    report = evaluate(tmp_path, with_scores(frames), method_name="identity")
    ap = format_ap_table(report_ap_rows(report))
    rows, thresholds = report_recall_rows(report)
    recall = format_recall_table(rows, thresholds)
    assert ap == (GOLDEN / "identity_ap_table.txt").read_text()
    assert recall == (GOLDEN / "identity_recall_table.txt").read_text()


def test_write_report_files_complete_set(tmp_path):
    frames = mixed_gt_frames()
    build_dataset(tmp_path / "ds", frames)
    report = evaluate(tmp_path / "ds", with_scores(frames))
    out = tmp_path / "report"
    written = write_report_files(report, out)
    names = {p.name for p in written}
    assert "report.json" in names
    assert "ap_table.txt" in names
    assert "recall_table.txt" in names
    for difficulty in ("easy", "moderate", "hard"):
        assert f"pr_curve_{difficulty}.csv" in names
        assert f"pr_curve_{difficulty}.svg" in names

    payload = json.loads((out / "report.json").read_text())
    assert payload["difficulties"]["hard"]["ap"]["0.70"]["ap11"] == 100.0
    assert "RoI and RCNN" in (out / "recall_table.txt").read_text()


def test_report_files_byte_stable(tmp_path):
    frames = mixed_gt_frames()
    build_dataset(tmp_path / "ds", frames)
    report = evaluate(tmp_path / "ds", with_scores(frames))
    write_report_files(report, tmp_path / "a")
    write_report_files(report, tmp_path / "b")
    for p in sorted((tmp_path / "a").iterdir()):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_pr_curve_csv_format():
    text = pr_curve_csv([(0.5, 1.0), (1.0, 0.75)])
    assert text.splitlines() == [
        "recall,precision",
        "0.500000,1.000000",
        "1.000000,0.750000",
    ]


def test_pr_curve_svg_wellformed():
    import xml.etree.ElementTree as ET

    svg = pr_curve_svg([(0.2, 0.9), (0.7, 0.6)], "demo")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert "polyline" in svg
    empty = pr_curve_svg([], "empty")
    ET.fromstring(empty)

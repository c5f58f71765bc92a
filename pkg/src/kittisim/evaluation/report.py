"""Report rendering: aligned text tables, JSON, PR-curve CSV and SVG.

Two table layouts are emitted: an AP table (AP11/AP40 groups, one column per
difficulty) and a recall table (one group per IoU threshold with RoI/RCNN
columns).  A bundled reference-results fixture provides rows of published
detector scores in the same layouts, used for format verification and the
``report --reference`` path.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .metrics import EvalReport

_CELL_WIDTH = 9


def load_reference_results() -> dict:
    with resources.files("kittisim.data").joinpath("reference_results.json").open() as fh:
        return json.load(fh)


def _grouped_table(
    names: list[str],
    groups: list[tuple[str, list[str], list[list[str]]]],
) -> str:
    """Render rows of cells under (group title -> column titles) headers."""
    name_w = max(len("Method"), *(len(n) for n in names)) if names else len("Method")
    group_widths = []
    for _, headers, columns in groups:
        width = sum(max(_CELL_WIDTH, len(h)) for h in headers) + 2 * (len(headers) - 1)
        group_widths.append(width)

    def name_cell(text: str) -> str:
        return text.ljust(name_w)

    top = [name_cell("Method")]
    sub = [name_cell("")]
    for (title, headers, _), width in zip(groups, group_widths):
        top.append(title.center(width))
        sub.append(
            "  ".join(h.rjust(max(_CELL_WIDTH, len(h))) for h in headers)
        )
    lines = [" | ".join(top), " | ".join(sub)]
    lines.append("-+-".join(["-" * name_w] + ["-" * w for w in group_widths]))
    for r, name in enumerate(names):
        row = [name_cell(name)]
        for (_, headers, columns), width in zip(groups, group_widths):
            row.append(
                "  ".join(
                    cell.rjust(max(_CELL_WIDTH, len(h)))
                    for h, cell in zip(headers, columns[r])
                )
            )
        lines.append(" | ".join(row))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def format_ap_table(
    rows: list[tuple[str, list[str], list[str]]],
    iou_label: str = "0.70",
    columns: tuple[str, ...] = ("Easy", "Moderate", "Hard"),
) -> str:
    """Rows are (method name, AP11 cells, AP40 cells), one cell per column."""
    names = [name for name, _, _ in rows]
    return _grouped_table(
        names,
        [
            (f"AP11 (IoU={iou_label})", list(columns), [r[1] for r in rows]),
            (f"AP40 (IoU={iou_label})", list(columns), [r[2] for r in rows]),
        ],
    )


def format_recall_table(
    rows: list[tuple[str, dict[str, list[str]]]],
    thresholds: tuple[str, ...] = ("0.30", "0.50"),
    columns: tuple[str, ...] = ("RoI", "RCNN"),
) -> str:
    """Rows are (method name, {threshold -> [RoI cell, RCNN cell]})."""
    names = [name for name, _ in rows]
    groups = []
    for thr in thresholds:
        groups.append(
            (f"Recall (IoU={thr})", list(columns), [cells[thr] for _, cells in rows])
        )
    return _grouped_table(names, groups)


def _fmt(value, pattern: str) -> str:
    return "n/a" if value is None else pattern.format(value)


def report_ap_rows(report: EvalReport) -> list[tuple[str, list[str], list[str]]]:
    thr = next(iter(next(iter(report.difficulties.values()))["ap"]))
    row11, row40 = [], []
    for difficulty in report.difficulties:
        entry = report.difficulties[difficulty]["ap"][thr]
        row11.append(_fmt(None if entry is None else entry.get("ap11"), "{:.4f}"))
        row40.append(_fmt(None if entry is None else entry.get("ap40"), "{:.4f}"))
    return [(report.method_name, row11, row40)]


def report_recall_rows(report: EvalReport) -> tuple[list, tuple[str, ...]]:
    """Recall-table rows from the most inclusive difficulty bucket."""
    last_difficulty = list(report.difficulties)[-1]
    block = report.difficulties[last_difficulty]["recall"]
    thresholds = tuple(block.keys())
    cells = {}
    for thr, entry in block.items():
        if entry is None:
            cells[thr] = ["n/a", "n/a"]
        else:
            cells[thr] = ["{:.4f}".format(entry["roi"]), "{:.4f}".format(entry["rcnn"])]
    return [(report.method_name, cells)], thresholds


def reference_ap_table() -> str:
    ref = load_reference_results()["ap"]
    rows = [(m["name"], m["ap11"], m["ap40"]) for m in ref["methods"]]
    return format_ap_table(rows, ref["iou"], tuple(ref["columns"]))


def reference_recall_table() -> str:
    ref = load_reference_results()["recall"]
    rows = [
        (m["name"], {thr: m[thr] for thr in ref["thresholds"]}) for m in ref["methods"]
    ]
    return format_recall_table(rows, tuple(ref["thresholds"]), tuple(ref["columns"]))


# --- PR curve exports -------------------------------------------------------------


def pr_curve_csv(points: list[tuple[float, float]]) -> str:
    lines = ["recall,precision"]
    lines += ["{:.6f},{:.6f}".format(r, p) for r, p in points]
    return "\n".join(lines) + "\n"


def pr_curve_svg(points: list[tuple[float, float]], title: str) -> str:
    """Self-contained 640x480 line chart of a precision-recall curve."""
    left, top, width, height = 70.0, 50.0, 520.0, 380.0

    def x(r: float) -> str:
        return "{:.2f}".format(left + r * width)

    def y(p: float) -> str:
        return "{:.2f}".format(top + (1.0 - p) * height)

    grid = []
    for i in range(6):
        v = i / 5.0
        grid.append(
            f'<line x1="{x(v)}" y1="{y(0)}" x2="{x(v)}" y2="{y(1)}" stroke="#ddd"/>'
        )
        grid.append(
            f'<line x1="{x(0)}" y1="{y(v)}" x2="{x(1)}" y2="{y(v)}" stroke="#ddd"/>'
        )
        grid.append(
            f'<text x="{x(v)}" y="465" text-anchor="middle" font-size="12">{v:.1f}</text>'
        )
        grid.append(
            f'<text x="40" y="{y(v)}" text-anchor="middle" font-size="12">{v:.1f}</text>'
        )
    polyline = ""
    if points:
        coords = " ".join(f"{x(r)},{y(p)}" for r, p in points)
        polyline = f'<polyline fill="none" stroke="#c22" stroke-width="2" points="{coords}"/>'
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 640 480">\n'
        f'<text x="320" y="24" text-anchor="middle" font-size="16">{title}</text>\n'
        f'<text x="320" y="478" text-anchor="middle" font-size="13">recall</text>\n'
        '<text x="16" y="240" text-anchor="middle" font-size="13" '
        'transform="rotate(-90 16 240)">precision</text>\n'
        + "\n".join(grid)
        + "\n"
        f'<rect x="{x(0)}" y="{y(1)}" width="{width:.2f}" height="{height:.2f}" '
        'fill="none" stroke="#333"/>\n'
        + polyline
        + "\n</svg>\n"
    )


def write_report_files(report: EvalReport, out_dir) -> list[Path]:
    """Emit report.json, both text tables, and per-difficulty curve files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "report.json"
    path.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    written.append(path)

    path = out_dir / "ap_table.txt"
    path.write_text(format_ap_table(report_ap_rows(report)))
    written.append(path)

    rows, thresholds = report_recall_rows(report)
    path = out_dir / "recall_table.txt"
    body = format_recall_table(rows, thresholds)
    body += "\n" + "\n".join(report.notes) + "\n" if report.notes else ""
    path.write_text(body)
    written.append(path)

    thr = next(iter(next(iter(report.difficulties.values()))["ap"]))
    for difficulty, block in report.difficulties.items():
        entry = block["ap"][thr]
        points = [] if entry is None else [tuple(p) for p in entry["curve"]]
        base = f"pr_curve_{difficulty}"
        csv_path = out_dir / f"{base}.csv"
        csv_path.write_text(pr_curve_csv(points))
        written.append(csv_path)
        svg_path = out_dir / f"{base}.svg"
        svg_path.write_text(
            pr_curve_svg(points, f"{report.method_name} {difficulty} (IoU={thr})")
        )
        written.append(svg_path)
    return written

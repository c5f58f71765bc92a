from .metrics import (
    ConfusionCounts,
    EvalConfig,
    EvalReport,
    PRCurve,
    ap11,
    ap40,
    assign_difficulty,
    evaluate,
    interp_precision,
    match_frame,
    pr_curve,
    read_predictions_dir,
    recall_at,
)
from .report import (
    format_ap_table,
    format_recall_table,
    load_reference_results,
    pr_curve_csv,
    pr_curve_svg,
    write_report_files,
)

__all__ = [
    "ConfusionCounts",
    "EvalConfig",
    "EvalReport",
    "PRCurve",
    "ap11",
    "ap40",
    "assign_difficulty",
    "evaluate",
    "format_ap_table",
    "format_recall_table",
    "interp_precision",
    "load_reference_results",
    "match_frame",
    "pr_curve",
    "pr_curve_csv",
    "pr_curve_svg",
    "read_predictions_dir",
    "recall_at",
    "write_report_files",
]

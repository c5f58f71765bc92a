"""Command-line entry point.

Subcommands: generate, validate, detect, evaluate, report, plot.
Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure,
4 empty result (no predictions / no overlapping frames / no ground truth).

Every mutating command writes a ``run.json`` manifest next to its output
(command, config digest, seed, tool version, timestamps).  The manifest
carries wall-clock timestamps and is the one file excluded from
byte-determinism comparisons between runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .box_geometry import sensor_box_to_label
from .config_io import ConfigError, RunConfig, default_run_config, load_run_config
from .detector import detect_frame
from .errors import (
    InfeasibleConfig,
    IoFailure,
    KittiSimError,
    NoGroundTruth,
    PredictionForUnknownFrame,
    StructureViolation,
)
from .evaluation.metrics import EvalConfig, evaluate, read_predictions_dir
from .evaluation.report import (
    format_ap_table,
    format_recall_table,
    pr_curve_csv,
    pr_curve_svg,
    reference_ap_table,
    reference_recall_table,
    report_ap_rows,
    report_recall_rows,
    write_report_files,
)
from .kitti_io import (
    default_calibration,
    read_velodyne,
    serialize_label,
    validate_dataset,
)
from .sim.dataset import config_digest, generate_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_EMPTY = 4


def _write_run_manifest(out_dir: Path, command: str, digest: str, seed, started, inputs, outputs):
    manifest = {
        "command": command,
        "config_digest": digest,
        "seed": seed,
        "tool_version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "inputs": inputs,
        "outputs": outputs,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "run.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_config(path: str | None) -> RunConfig:
    return load_run_config(path) if path else default_run_config()


# --- subcommands -----------------------------------------------------------------


def cmd_generate(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    try:
        run = _load_config(args.config)
        scenario = run.scenario
        if args.seed is not None:
            scenario = dataclasses.replace(scenario, seed=args.seed)
        schedule = run.schedule()
    except (ConfigError, InfeasibleConfig) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        index = generate_dataset(
            scenario, run.lidar, schedule, out, jobs=args.jobs
        )
    except (InfeasibleConfig,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KittiSimError, OSError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _write_run_manifest(
        out,
        "generate",
        config_digest(scenario, run.lidar, schedule),
        scenario.seed,
        started,
        inputs={"config": args.config or "<bundled default>"},
        outputs={"dataset": str(out), "frames": len(index.frame_ids)},
    )
    print(f"generated {len(index.frame_ids)} frames at {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        index = validate_dataset(args.dataset)
    except IoFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StructureViolation as exc:
        for violation in exc.violations:
            print(f"violation: {violation}", file=sys.stderr)
        print(f"{len(exc.violations)} violation(s) found", file=sys.stderr)
        return EXIT_RUNTIME
    print(
        f"OK: {len(index.frame_ids)} frames "
        f"({len(index.test_ids)} test / {len(index.val_ids)} val)"
    )
    return EXIT_OK


def cmd_detect(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    try:
        run = _load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        index = validate_dataset(args.dataset)
    except (IoFailure, StructureViolation) as exc:
        print(f"bad dataset: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    calib = default_calibration()

    def run_frame(fid: str) -> tuple[str, str]:
        cloud = read_velodyne(index.path("velodyne", fid))
        boxes = detect_frame(cloud, run.detector)
        lines = []
        for box in boxes:
            rec = sensor_box_to_label(box, calib)
            if rec is not None:
                lines.append(serialize_label(rec))
        return fid, "".join(line + "\n" for line in lines)

    try:
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(run_frame, index.frame_ids))
        else:
            results = [run_frame(fid) for fid in index.frame_ids]
        for fid, body in results:
            tmp = out / f"{fid}.txt.tmp"
            tmp.write_text(body)
            os.replace(tmp, out / f"{fid}.txt")
    except (KittiSimError, OSError) as exc:
        print(f"detection failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    detector_digest = hashlib.sha256(
        json.dumps(dataclasses.asdict(run.detector), sort_keys=True).encode()
    ).hexdigest()
    _write_run_manifest(
        out,
        "detect",
        detector_digest,
        None,
        started,
        inputs={"dataset": str(args.dataset)},
        outputs={"predictions": str(out), "frames": len(index.frame_ids)},
    )
    print(f"wrote predictions for {len(index.frame_ids)} frames to {out}")
    return EXIT_OK


def _eval_config(args, base: EvalConfig) -> EvalConfig:
    kwargs = {}
    if args.iou is not None:
        kwargs["ap_iou_thresholds"] = (args.iou,)
    if args.interp is not None:
        kwargs["interpolation"] = args.interp
    if args.iou_mode is not None:
        kwargs["iou_mode"] = args.iou_mode
    return dataclasses.replace(base, **kwargs) if kwargs else base


def cmd_evaluate(args) -> int:
    started = datetime.now(timezone.utc).isoformat()
    try:
        run = _load_config(args.config)
        cfg = _eval_config(args, run.eval)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        index = validate_dataset(args.dataset)
    except (IoFailure, StructureViolation) as exc:
        print(f"bad dataset: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    pred_dir = Path(args.predictions)
    if not pred_dir.is_dir():
        print(f"bad predictions dir: {pred_dir}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        predictions = read_predictions_dir(pred_dir)
    except KittiSimError as exc:
        print(f"bad predictions: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not predictions:
        print("no prediction files found", file=sys.stderr)
        return EXIT_EMPTY
    frame_ids = index.frame_ids
    if args.split != "all":
        frame_ids = index.test_ids if args.split == "test" else index.val_ids
    if not set(predictions) & set(frame_ids):
        print("no overlap between prediction and dataset frames", file=sys.stderr)
        return EXIT_EMPTY
    try:
        report = evaluate(
            index,
            {f: p for f, p in predictions.items() if f in set(frame_ids)},
            cfg,
            method_name=args.method,
            frame_ids=frame_ids,
        )
    except PredictionForUnknownFrame as exc:
        print(f"bad predictions: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoGroundTruth as exc:
        print(f"empty evaluation: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except KittiSimError as exc:
        print(f"evaluation failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out = Path(args.out)
    write_report_files(report, out)
    _write_run_manifest(
        out,
        "evaluate",
        hashlib.sha256(json.dumps(dataclasses.asdict(cfg)).encode()).hexdigest(),
        None,
        started,
        inputs={"dataset": str(args.dataset), "predictions": str(pred_dir)},
        outputs={"report": str(out)},
    )
    print(format_ap_table(report_ap_rows(report)))
    rows, thresholds = report_recall_rows(report)
    print(format_recall_table(rows, thresholds))
    print(f"report written to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    if args.reference:
        ap, recall = reference_ap_table(), reference_recall_table()
    else:
        try:
            payload = json.loads(Path(args.from_report).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read report: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        from .evaluation.metrics import EvalReport

        report = EvalReport(
            dataset=payload["dataset"],
            predictions=payload["predictions"],
            iou_mode=payload["iou_mode"],
            method_name=payload["method_name"],
            difficulties=payload["difficulties"],
            frames=payload["frames"],
            notes=tuple(payload.get("notes", ())),
        )
        ap = format_ap_table(report_ap_rows(report))
        rows, thresholds = report_recall_rows(report)
        recall = format_recall_table(rows, thresholds)
    print(ap)
    print(recall)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ap_table.txt").write_text(ap)
        (out / "recall_table.txt").write_text(recall)
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        payload = json.loads(Path(args.from_report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for difficulty, block in payload["difficulties"].items():
        for thr, entry in block["ap"].items():
            if entry is None:
                continue
            points = [tuple(p) for p in entry["curve"]]
            base = f"pr_curve_{difficulty}_iou{thr.replace('.', '')}"
            (out / f"{base}.csv").write_text(pr_curve_csv(points))
            (out / f"{base}.svg").write_text(
                pr_curve_svg(points, f"{payload['method_name']} {difficulty} (IoU={thr})")
            )
            written += 2
    if not written:
        print("report holds no curves to plot", file=sys.stderr)
        return EXIT_EMPTY
    print(f"wrote {written} plot files to {out}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kittisim",
        description=(
            "Simulate the highway-overtake scene into a KITTI-format LiDAR "
            "dataset under 21 weather presets, run the baseline detector, and "
            "evaluate detections (AP11/AP40, recall at fixed IoU)."
        ),
    )
    parser.add_argument("--version", action="version", version=f"kittisim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate and write a dataset tree")
    p.add_argument("--config", help="TOML run config (bundled default when omitted)")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--jobs", type=int, default=1, help="parallel frame workers")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a dataset tree's structure")
    p.add_argument("dataset", help="dataset root directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("detect", help="run the baseline detector over a dataset")
    p.add_argument("dataset", help="dataset root directory")
    p.add_argument("--out", required=True, help="prediction output directory")
    p.add_argument("--config", help="TOML run config for detector parameters")
    p.add_argument("--jobs", type=int, default=1, help="parallel frame workers")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("evaluate", help="score predictions against a dataset")
    p.add_argument("dataset", help="dataset root directory")
    p.add_argument("predictions", help="KITTI result directory (NNNNNN.txt)")
    p.add_argument("--out", default="eval_out", help="report output directory")
    p.add_argument("--config", help="TOML run config for evaluation parameters")
    p.add_argument("--iou", type=float, help="AP IoU threshold override")
    p.add_argument("--interp", choices=("ap11", "ap40", "both"), help="interpolation")
    p.add_argument("--iou-mode", choices=("3d", "bev"), dest="iou_mode", help="overlap mode")
    p.add_argument("--split", choices=("all", "test", "val"), default="all")
    p.add_argument("--method", default="baseline", help="method name for report rows")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render tables from a saved report")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--from-report", help="path to a report.json")
    src.add_argument(
        "--reference",
        action="store_true",
        help="render the bundled published-results fixture",
    )
    p.add_argument("--out", help="also write the tables to this directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("plot", help="export PR curves from a saved report")
    p.add_argument("--from-report", required=True, help="path to a report.json")
    p.add_argument("--out", required=True, help="plot output directory")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()

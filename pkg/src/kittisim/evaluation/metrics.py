"""Detection evaluation: greedy matching, precision/recall, interpolated
average precision (11- and 40-point), and recall at fixed IoU thresholds.

Precision is TP / (TP + FP); recall is TP / (TP + FN), denominated by the
matchable ground-truth count.  Average precision interpolates precision at
fixed recall levels, where the interpolated precision at recall r is the
maximum precision at any achieved recall >= r (0 when none is reached).

Difficulty buckets are cumulative in the KITTI manner: "moderate" includes
easy objects, "hard" includes both.  Ground truths outside the evaluated
bucket are ignored: predictions that land on them count neither as TP nor
FP, and they are never FN.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..box_geometry import bev_iou, box_from_label, iou_3d
from ..errors import (
    MissingScore,
    NoGroundTruth,
    PredictionForUnknownFrame,
)
from ..kitti_io import DatasetIndex, LabelRecord, read_label_file, validate_dataset

AP11_LEVELS = tuple(i / 10.0 for i in range(11))
AP40_LEVELS = tuple(i / 40.0 for i in range(1, 41))

DIFFICULTIES = ("easy", "moderate", "hard")
_DIFFICULTY_RANK = {"easy": 0, "moderate": 1, "hard": 2, "ignored": 3}

# (min 2D box height px, max occlusion, max truncation)
_DIFFICULTY_RULES = (
    ("easy", 40.0, 0, 0.15),
    ("moderate", 25.0, 1, 0.30),
    ("hard", 25.0, 2, 0.50),
)


def assign_difficulty(rec: LabelRecord) -> str:
    """Bucket a ground-truth record by 2D height, occlusion, truncation."""
    height = rec.bbox2d[3] - rec.bbox2d[1]
    for name, min_height, max_occ, max_trunc in _DIFFICULTY_RULES:
        if height >= min_height and rec.occlusion <= max_occ and rec.truncation <= max_trunc:
            return name
    return "ignored"


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0  # undefined for open-world detection; carried as 0

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass
class PRCurve:
    """(recall, precision) points ordered by descending score threshold."""

    points: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        last_r = -1.0
        for r, p in self.points:
            if not (0.0 <= r <= 1.0 and 0.0 <= p <= 1.0):
                raise ValueError(f"curve point ({r}, {p}) outside the unit square")
            if r < last_r - 1e-12:
                raise ValueError("recall must be non-decreasing along the curve")
            last_r = r


@dataclass(frozen=True)
class EvalConfig:
    ap_iou_thresholds: tuple[float, ...] = (0.70,)
    recall_iou_thresholds: tuple[float, ...] = (0.30, 0.50)
    iou_mode: str = "3d"  # "3d" | "bev"
    difficulties: tuple[str, ...] = DIFFICULTIES
    interpolation: str = "both"  # "ap11" | "ap40" | "both"

    def __post_init__(self):
        for thr in self.ap_iou_thresholds + self.recall_iou_thresholds:
            if not 0.0 < thr <= 1.0:
                raise ValueError(f"IoU threshold {thr} outside (0, 1]")
        if self.iou_mode not in ("3d", "bev"):
            raise ValueError(f"iou_mode must be 3d or bev, got {self.iou_mode!r}")
        if self.interpolation not in ("ap11", "ap40", "both"):
            raise ValueError(f"bad interpolation {self.interpolation!r}")
        for d in self.difficulties:
            if d not in DIFFICULTIES:
                raise ValueError(f"unknown difficulty {d!r}")


# --- matching -----------------------------------------------------------------


def match_frame(
    preds: list[LabelRecord],
    gts: list[LabelRecord],
    iou_fn,
    threshold: float,
    gt_matchable: list[bool] | None = None,
) -> tuple[list[str], list[bool]]:
    """Greedy one-frame matching.

    Predictions are processed in descending score (ties by record index);
    each claims the highest-IoU not-yet-matched matchable ground truth with
    IoU >= threshold and becomes a TP, otherwise an FP -- unless its best
    remaining overlap is an ignored ground truth, in which case it counts as
    neither.  Returns (per-prediction outcome in input order with values
    "tp" | "fp" | "ignored", per-gt matched flags).
    """
    if gt_matchable is None:
        gt_matchable = [True] * len(gts)
    for i, p in enumerate(preds):
        if p.score is None:
            raise MissingScore(f"prediction {i} has no score")

    iou = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            iou[i, j] = iou_fn(p, g)

    order = sorted(range(len(preds)), key=lambda i: (-preds[i].score, i))
    outcome = ["fp"] * len(preds)
    matched = [False] * len(gts)
    for i in order:
        best_j, best_iou = -1, 0.0
        for j in range(len(gts)):
            if matched[j] or not gt_matchable[j]:
                continue
            v = iou[i, j]
            if v >= threshold and (best_j < 0 or v > best_iou):
                best_j, best_iou = j, v
        if best_j >= 0:
            matched[best_j] = True
            outcome[i] = "tp"
            continue
        # suppressed by an ignored ground truth it overlaps enough
        for j in range(len(gts)):
            if not gt_matchable[j] and iou[i, j] >= threshold:
                outcome[i] = "ignored"
                break
    return outcome, matched


def _match_all_frames(
    frames: list[tuple[str, list[LabelRecord], list[LabelRecord], list[bool]]],
    iou_fn,
    threshold: float,
) -> tuple[list[tuple[float, str, str, int]], int, dict[str, ConfusionCounts]]:
    """Match every frame; returns (scored outcomes, matchable gt total,
    per-frame counts).  Outcomes are (score, outcome, frame_id, pred_index)."""
    outcomes = []
    total_matchable = 0
    per_frame: dict[str, ConfusionCounts] = {}
    for frame_id, preds, gts, matchable in frames:
        flags, matched = match_frame(preds, gts, iou_fn, threshold, matchable)
        n_matchable = sum(matchable)
        total_matchable += n_matchable
        tp = flags.count("tp")
        counts = ConfusionCounts(
            tp=tp, fp=flags.count("fp"), fn=n_matchable - tp
        )
        per_frame[frame_id] = counts
        for i, flag in enumerate(flags):
            outcomes.append((float(preds[i].score), flag, frame_id, i))
    return outcomes, total_matchable, per_frame


# --- curves and scalar metrics ---------------------------------------------------


def pr_curve(outcomes: list[tuple[float, str, str, int]], total_gt: int) -> PRCurve:
    """Sweep the score threshold over all distinct prediction scores
    (descending); one point per threshold."""
    if total_gt <= 0:
        raise NoGroundTruth("no matchable ground-truth objects in scope")
    ordered = sorted(
        (o for o in outcomes if o[1] != "ignored"),
        key=lambda o: (-o[0], o[2], o[3]),
    )
    points = []
    tp = fp = 0
    for k, (score, flag, _, _) in enumerate(ordered):
        tp += flag == "tp"
        fp += flag == "fp"
        is_last_at_score = k + 1 == len(ordered) or ordered[k + 1][0] != score
        if is_last_at_score:
            points.append((tp / total_gt, tp / (tp + fp)))
    return PRCurve(points)


def interp_precision(curve: PRCurve, r: float) -> float:
    """Max precision over curve points with recall >= r; 0 when unreached."""
    best = 0.0
    for recall, precision in curve.points:
        if recall >= r - 1e-12:
            best = max(best, precision)
    return best


def _ap(curve: PRCurve, levels: tuple[float, ...]) -> float:
    return 100.0 * sum(interp_precision(curve, r) for r in levels) / len(levels)


def ap11(curve: PRCurve) -> float:
    """Interpolated AP over the 11 recall levels 0.0, 0.1, ..., 1.0 (percent)."""
    return _ap(curve, AP11_LEVELS)


def ap40(curve: PRCurve) -> float:
    """Interpolated AP over the 40 recall levels 0.025, ..., 1.0 (percent)."""
    return _ap(curve, AP40_LEVELS)


def recall_at(outcomes: list[tuple[float, str, str, int]], total_gt: int) -> float:
    """Score-agnostic detection recall: TP over matchable ground truths."""
    if total_gt <= 0:
        raise NoGroundTruth("no matchable ground-truth objects in scope")
    tp = sum(1 for o in outcomes if o[1] == "tp")
    return tp / total_gt


# --- whole-dataset evaluation -----------------------------------------------------


@dataclass
class EvalReport:
    dataset: str
    predictions: str
    iou_mode: str
    method_name: str
    difficulties: dict  # difficulty -> metrics block
    frames: dict  # frame id -> confusion counts at the primary AP threshold
    notes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "predictions": self.predictions,
            "iou_mode": self.iou_mode,
            "method_name": self.method_name,
            "difficulties": self.difficulties,
            "frames": self.frames,
            "notes": list(self.notes),
        }


def read_predictions_dir(path, index: DatasetIndex | None = None) -> dict[str, list[LabelRecord]]:
    """Load a KITTI result directory (NNNNNN.txt, 16-field lines)."""
    path = Path(path)
    preds: dict[str, list[LabelRecord]] = {}
    for f in sorted(path.glob("*.txt")):
        frame_id = f.stem
        if index is not None and frame_id not in index.split:
            raise PredictionForUnknownFrame(
                f"prediction file {f.name} has no frame in the dataset"
            )
        preds[frame_id] = read_label_file(f, expect_score=True)
    return preds


def evaluate(
    dataset: DatasetIndex | str | Path,
    predictions: dict[str, list[LabelRecord]],
    cfg: EvalConfig = EvalConfig(),
    method_name: str = "detections",
    frame_ids: list[str] | None = None,
) -> EvalReport:
    """Evaluate per difficulty bucket: AP11/AP40 at the AP thresholds and
    recall at the recall thresholds.  Frames without predictions contribute
    false negatives.  Buckets without objects report null metrics; the call
    fails only when no bucket has any."""
    index = dataset if isinstance(dataset, DatasetIndex) else validate_dataset(dataset)
    ids = list(frame_ids) if frame_ids is not None else list(index.frame_ids)
    unknown = set(predictions) - set(index.frame_ids)
    if unknown:
        raise PredictionForUnknownFrame(
            f"predictions reference unknown frames: {sorted(unknown)[:5]}"
        )

    gts = {fid: read_label_file(index.path("label_2", fid)) for fid in ids}
    gt_difficulty = {fid: [assign_difficulty(g) for g in gts[fid]] for fid in ids}

    iou_box = iou_3d if cfg.iou_mode == "3d" else bev_iou
    cache: dict[tuple[int, int], float] = {}

    def iou_fn(p: LabelRecord, g: LabelRecord) -> float:
        key = (id(p), id(g))
        if key not in cache:
            cache[key] = iou_box(box_from_label(p), box_from_label(g))
        return cache[key]

    difficulties_block = {}
    frames_block: dict[str, dict] = {}
    any_gt = False
    for difficulty in cfg.difficulties:
        rank = _DIFFICULTY_RANK[difficulty]
        frames = []
        for fid in ids:
            matchable = [_DIFFICULTY_RANK[d] <= rank for d in gt_difficulty[fid]]
            frames.append((fid, predictions.get(fid, []), gts[fid], matchable))
        total = sum(sum(m) for _, _, _, m in frames)
        block: dict = {"gt_count": total, "ap": {}, "recall": {}}
        if total == 0:
            for thr in cfg.ap_iou_thresholds:
                block["ap"][f"{thr:.2f}"] = None
            for thr in cfg.recall_iou_thresholds:
                block["recall"][f"{thr:.2f}"] = None
            difficulties_block[difficulty] = block
            continue
        any_gt = True

        for thr in cfg.ap_iou_thresholds:
            outcomes, total_gt, per_frame = _match_all_frames(frames, iou_fn, thr)
            curve = pr_curve(outcomes, total_gt)
            entry = {"curve": [[r, p] for r, p in curve.points]}
            if cfg.interpolation in ("ap11", "both"):
                entry["ap11"] = ap11(curve)
            if cfg.interpolation in ("ap40", "both"):
                entry["ap40"] = ap40(curve)
            block["ap"][f"{thr:.2f}"] = entry
            if difficulty == cfg.difficulties[-1] and thr == cfg.ap_iou_thresholds[0]:
                frames_block = {f: c.as_dict() for f, c in per_frame.items()}

        for thr in cfg.recall_iou_thresholds:
            outcomes, total_gt, per_frame = _match_all_frames(frames, iou_fn, thr)
            r = recall_at(outcomes, total_gt)
            counts = ConfusionCounts(
                tp=sum(c.tp for c in per_frame.values()),
                fp=sum(c.fp for c in per_frame.values()),
                fn=sum(c.fn for c in per_frame.values()),
            )
            # proposal-stage and refined-stage recall collapse to one number
            # for single-stage (final detection) inputs
            block["recall"][f"{thr:.2f}"] = {
                "roi": r,
                "rcnn": r,
                "counts": counts.as_dict(),
            }
        difficulties_block[difficulty] = block

    if not any_gt:
        raise NoGroundTruth("dataset contains no ground-truth objects in scope")

    return EvalReport(
        dataset=str(index.root),
        predictions=method_name,
        iou_mode=cfg.iou_mode,
        method_name=method_name,
        difficulties=difficulties_block,
        frames=frames_block,
        notes=(
            "RoI and RCNN recall columns are populated identically: inputs are "
            "final single-stage detections, proposal-stage internals are not observable.",
        ),
    )

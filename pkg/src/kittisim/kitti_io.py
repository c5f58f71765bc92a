"""Readers, writers, and validators for the KITTI-format dataset tree.

Layout handled here::

    root/
      velodyne/NNNNNN.bin     little-endian float32 (x, y, z, intensity) records
      label_2/NNNNNN.txt      15-field ground-truth lines (16 with score)
      calib/NNNNNN.txt        key: value matrix lines
      image_2/NNNNNN.png
      ImageSets/test.txt      newline-separated frame ids
      ImageSets/val.txt

Text serialization uses 2 decimals for geometry fields and 4 for scores;
round-trip equality is defined at that precision.  Binary point files
round-trip byte-identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    FieldCountMismatch,
    IoFailure,
    MatrixShape,
    MissingKey,
    NonFiniteValue,
    NumericParse,
    RangeViolation,
    StructureViolation,
    TruncatedFile,
)

POINT_DTYPE = np.dtype("<f4")
_POINT_STRIDE = 16  # 4 little-endian float32 per point
_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_ANGLE_SLACK = 1e-6


def frame_name(index: int) -> str:
    """Zero-padded width-6 frame id."""
    if not 0 <= index <= 999999:
        raise ValueError(f"frame index out of range: {index}")
    return f"{index:06d}"


# --- point clouds -----------------------------------------------------------


class PointCloud:
    """Ordered LiDAR returns as an (N, 4) float32 array: x, y, z, intensity."""

    def __init__(self, points):
        pts = np.ascontiguousarray(points, dtype=POINT_DTYPE).reshape(-1, 4)
        bad = ~np.isfinite(pts)
        if bad.any():
            idx = int(np.argwhere(bad.any(axis=1))[0, 0])
            raise NonFiniteValue(f"non-finite value at point {idx}", index=idx)
        intensity = pts[:, 3]
        if len(pts) and (intensity.min() < 0.0 or intensity.max() > 1.0):
            idx = int(np.argwhere((intensity < 0.0) | (intensity > 1.0))[0, 0])
            raise RangeViolation(f"intensity outside [0, 1] at point {idx}")
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def intensity(self) -> np.ndarray:
        return self.points[:, 3]


def read_velodyne(path) -> PointCloud:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if len(raw) % _POINT_STRIDE != 0:
        raise TruncatedFile(
            f"{path}: length {len(raw)} is not a multiple of {_POINT_STRIDE}"
        )
    pts = np.frombuffer(raw, dtype=POINT_DTYPE).reshape(-1, 4)
    return PointCloud(pts)


def write_velodyne(cloud: PointCloud, path) -> None:
    path = Path(path)
    try:
        path.write_bytes(cloud.points.astype(POINT_DTYPE).tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# --- label records ----------------------------------------------------------


@dataclass
class LabelRecord:
    """One KITTI label/prediction line.

    ``dims`` follows the on-disk (h, w, l) order; ``location`` is the
    camera-frame bottom-center of the box.  ``score`` is present exactly for
    prediction records.
    """

    class_name: str
    truncation: float
    occlusion: int
    alpha: float
    bbox2d: tuple[float, float, float, float]
    dims: tuple[float, float, float]
    location: tuple[float, float, float]
    rotation_y: float
    score: float | None = None

    def validate(self) -> None:
        if not self.class_name or any(ch.isspace() for ch in self.class_name):
            raise RangeViolation(f"bad class name {self.class_name!r}")
        if not 0.0 <= self.truncation <= 1.0:
            raise RangeViolation(f"truncation {self.truncation} outside [0, 1]")
        if self.occlusion not in (0, 1, 2, 3):
            raise RangeViolation(f"occlusion {self.occlusion} not in {{0, 1, 2, 3}}")
        for name, v in (("alpha", self.alpha), ("rotation_y", self.rotation_y)):
            if not math.isfinite(v) or abs(v) > math.pi + _ANGLE_SLACK:
                raise RangeViolation(f"{name} {v} outside [-pi, pi]")
        left, top, right, bottom = self.bbox2d
        if not all(map(math.isfinite, self.bbox2d)):
            raise RangeViolation("non-finite 2D bbox")
        if right < left or bottom < top:
            raise RangeViolation(f"inverted 2D bbox {self.bbox2d}")
        h, w, l = self.dims
        if not all(map(math.isfinite, self.dims)) or min(h, w, l) <= 0.0:
            raise RangeViolation(f"non-positive dims {self.dims}")
        if not all(map(math.isfinite, self.location)):
            raise RangeViolation("non-finite location")
        if self.score is not None and not math.isfinite(self.score):
            raise RangeViolation(f"non-finite score {self.score}")


def parse_label_line(line: str, expect_score: bool = False) -> LabelRecord:
    fields = line.split()
    expected = 16 if expect_score else 15
    if len(fields) != expected:
        raise FieldCountMismatch(
            f"expected {expected} fields, got {len(fields)}: {line!r}"
        )

    def num(i: int) -> float:
        try:
            return float(fields[i])
        except ValueError as exc:
            raise NumericParse(f"field {i} ({fields[i]!r}) is not numeric", i) from exc

    occ_raw = num(2)
    if occ_raw != int(occ_raw):
        raise RangeViolation(f"occlusion {fields[2]!r} is not an integer")
    rec = LabelRecord(
        class_name=fields[0],
        truncation=num(1),
        occlusion=int(occ_raw),
        alpha=num(3),
        bbox2d=(num(4), num(5), num(6), num(7)),
        dims=(num(8), num(9), num(10)),
        location=(num(11), num(12), num(13)),
        rotation_y=num(14),
        score=num(15) if expect_score else None,
    )
    rec.validate()
    return rec


def serialize_label(rec: LabelRecord) -> str:
    rec.validate()
    g = "{:.2f}".format
    parts = [
        rec.class_name,
        g(rec.truncation),
        str(rec.occlusion),
        g(rec.alpha),
        *(g(v) for v in rec.bbox2d),
        *(g(v) for v in rec.dims),
        *(g(v) for v in rec.location),
        g(rec.rotation_y),
    ]
    if rec.score is not None:
        parts.append("{:.4f}".format(rec.score))
    return " ".join(parts)


def read_label_file(path, expect_score: bool = False) -> list[LabelRecord]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return [
        parse_label_line(line, expect_score=expect_score)
        for line in text.splitlines()
        if line.strip()
    ]


def write_label_file(records, path) -> None:
    path = Path(path)
    body = "".join(serialize_label(rec) + "\n" for rec in records)
    try:
        path.write_text(body)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# --- calibration ------------------------------------------------------------

_CALIB_KEYS = (
    ("P0", (3, 4)),
    ("P1", (3, 4)),
    ("P2", (3, 4)),
    ("P3", (3, 4)),
    ("R0_rect", (3, 3)),
    ("Tr_velo_to_cam", (3, 4)),
    ("Tr_imu_to_velo", (3, 4)),
)


@dataclass
class CalibrationSet:
    P0: np.ndarray
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    R0_rect: np.ndarray
    Tr_velo_to_cam: np.ndarray
    Tr_imu_to_velo: np.ndarray

    def __post_init__(self):
        for key, shape in _CALIB_KEYS:
            m = np.asarray(getattr(self, key), dtype=np.float64)
            if m.shape != shape:
                raise MatrixShape(f"{key} must have shape {shape}, got {m.shape}")
            setattr(self, key, m)

    def validate(self, tol: float = 1e-9) -> None:
        """Check rotation parts are orthonormal and R0_rect is a rotation."""
        for key in ("Tr_velo_to_cam", "Tr_imu_to_velo"):
            r = getattr(self, key)[:, :3]
            if not np.allclose(r.T @ r, np.eye(3), atol=tol):
                raise RangeViolation(f"{key} rotation part is not orthonormal")
        r0 = self.R0_rect
        if not np.allclose(r0.T @ r0, np.eye(3), atol=tol):
            raise RangeViolation("R0_rect is not orthonormal")
        if abs(np.linalg.det(r0) - 1.0) > tol:
            raise RangeViolation("R0_rect determinant is not 1")

    def __eq__(self, other) -> bool:
        return isinstance(other, CalibrationSet) and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k, _ in _CALIB_KEYS
        )


def default_calibration() -> CalibrationSet:
    """Synthetic calibration: camera at the sensor origin, axis permutation
    sensor->camera, pinhole with f=720 px centered on a 1242x375 image."""
    p = np.array(
        [[720.0, 0.0, 621.0, 0.0], [0.0, 720.0, 187.5, 0.0], [0.0, 0.0, 1.0, 0.0]]
    )
    velo_to_cam = np.array(
        [[0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [1.0, 0.0, 0.0, 0.0]]
    )
    imu_to_velo = np.hstack([np.eye(3), np.zeros((3, 1))])
    return CalibrationSet(
        P0=p.copy(),
        P1=p.copy(),
        P2=p.copy(),
        P3=p.copy(),
        R0_rect=np.eye(3),
        Tr_velo_to_cam=velo_to_cam,
        Tr_imu_to_velo=imu_to_velo,
    )


def read_calib(path) -> CalibrationSet:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    values: dict[str, np.ndarray] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        tokens = rest.split()
        parsed = []
        for i, tok in enumerate(tokens):
            try:
                parsed.append(float(tok))
            except ValueError as exc:
                raise NumericParse(f"{key} token {i} ({tok!r}) is not numeric", i) from exc
        values[key] = np.array(parsed)
    kwargs = {}
    for key, shape in _CALIB_KEYS:
        if key not in values:
            raise MissingKey(f"{path}: missing calibration key {key}")
        flat = values[key]
        if flat.size != shape[0] * shape[1]:
            raise MatrixShape(
                f"{path}: {key} has {flat.size} values, expected {shape[0] * shape[1]}"
            )
        kwargs[key] = flat.reshape(shape)
    return CalibrationSet(**kwargs)


def write_calib(calib: CalibrationSet, path) -> None:
    lines = []
    for key, _ in _CALIB_KEYS:
        flat = getattr(calib, key).reshape(-1)
        lines.append(key + ": " + " ".join(repr(float(v)) for v in flat))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


# --- dataset tree -----------------------------------------------------------

_DATA_DIRS = (("velodyne", ".bin"), ("label_2", ".txt"), ("calib", ".txt"), ("image_2", ".png"))


@dataclass
class DatasetIndex:
    root: Path
    frame_ids: list[str]
    split: dict[str, str]  # frame id -> "test" | "val"

    @property
    def test_ids(self) -> list[str]:
        return [f for f in self.frame_ids if self.split[f] == "test"]

    @property
    def val_ids(self) -> list[str]:
        return [f for f in self.frame_ids if self.split[f] == "val"]

    def path(self, subdir: str, frame_id: str) -> Path:
        ext = dict(_DATA_DIRS)[subdir]
        return self.root / subdir / f"{frame_id}{ext}"


def write_split_files(root, test_ids, val_ids) -> None:
    sets_dir = Path(root) / "ImageSets"
    sets_dir.mkdir(parents=True, exist_ok=True)
    (sets_dir / "test.txt").write_text("".join(f + "\n" for f in test_ids))
    (sets_dir / "val.txt").write_text("".join(f + "\n" for f in val_ids))


def _read_split_file(path: Path, violations: list[str]) -> list[str]:
    if not path.is_file():
        violations.append(f"missing split file {path.name}")
        return []
    ids = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    for f in ids:
        if len(f) != 6 or not f.isdigit():
            violations.append(f"{path.name}: malformed frame id {f!r}")
    if len(set(ids)) != len(ids):
        dupes = sorted({f for f in ids if ids.count(f) > 1})
        violations.append(f"{path.name}: duplicate frame ids {dupes}")
    return ids


def validate_dataset(root) -> DatasetIndex:
    """Check the full tree shape and return an index, or raise
    StructureViolation carrying every violation found."""
    root = Path(root)
    if not root.is_dir():
        raise IoFailure(f"dataset root {root} does not exist")
    violations: list[str] = []

    test_ids = _read_split_file(root / "ImageSets" / "test.txt", violations)
    val_ids = _read_split_file(root / "ImageSets" / "val.txt", violations)
    overlap = sorted(set(test_ids) & set(val_ids))
    if overlap:
        violations.append(f"frames in both splits: {overlap}")
    split = {f: "test" for f in test_ids}
    split.update({f: "val" for f in val_ids})
    frame_ids = sorted(split)

    for subdir, ext in _DATA_DIRS:
        d = root / subdir
        if not d.is_dir():
            violations.append(f"missing directory {subdir}/")
            continue
        present = {p.name for p in d.iterdir()}
        for f in frame_ids:
            if f"{f}{ext}" not in present:
                violations.append(f"missing file {subdir}/{f}{ext}")
        expected = {f"{f}{ext}" for f in frame_ids}
        for name in sorted(present - expected):
            violations.append(f"orphan file {subdir}/{name}")

    image_dir = root / "image_2"
    if image_dir.is_dir():
        for f in frame_ids:
            p = image_dir / f"{f}.png"
            if p.is_file():
                with open(p, "rb") as fh:
                    if fh.read(8) != _PNG_MAGIC:
                        violations.append(f"image_2/{p.name} lacks PNG magic bytes")

    if violations:
        raise StructureViolation(violations)
    return DatasetIndex(root=root, frame_ids=frame_ids, split=split)

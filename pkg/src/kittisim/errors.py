"""Exception types raised across the toolkit.

Every failure mode that callers are expected to handle has its own class so
that CLI code and tests can discriminate without string matching.
"""

from __future__ import annotations


class KittiSimError(Exception):
    """Base class for all toolkit errors."""


class IoFailure(KittiSimError):
    """Filesystem read/write failed."""


class TruncatedFile(KittiSimError):
    """Binary point file length is not a multiple of the point stride."""


class NonFiniteValue(KittiSimError):
    """NaN or Inf encountered where a finite value is required."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class FieldCountMismatch(KittiSimError):
    """Label line does not have exactly 15 (ground truth) or 16 (prediction) fields."""


class NumericParse(KittiSimError):
    """A label field failed to parse as a decimal number."""

    def __init__(self, message: str, field_index: int):
        super().__init__(message)
        self.field_index = field_index


class RangeViolation(KittiSimError):
    """A parsed value is outside its documented range."""


class MissingKey(KittiSimError):
    """Calibration file lacks a required key."""


class MatrixShape(KittiSimError):
    """Calibration matrix has the wrong number of elements."""


class StructureViolation(KittiSimError):
    """Dataset tree violates the expected layout.

    Carries the full list of violations, one human-readable string each.
    """

    def __init__(self, violations: list[str]):
        super().__init__(f"{len(violations)} dataset structure violation(s)")
        self.violations = violations


class FrameMismatch(KittiSimError):
    """Operation combined boxes tagged with different coordinate frames."""


class BehindCamera(KittiSimError):
    """Box lies entirely behind the image plane."""


class InfeasibleConfig(KittiSimError):
    """Scenario configuration cannot produce a valid timeline."""


class DegenerateCloud(KittiSimError):
    """Point cloud too small for the requested operation."""


class MissingScore(KittiSimError):
    """A prediction record lacks the confidence score required for matching."""


class NoGroundTruth(KittiSimError):
    """No matchable ground-truth objects in evaluation scope."""


class PredictionForUnknownFrame(KittiSimError):
    """Prediction references a frame id absent from the dataset index."""

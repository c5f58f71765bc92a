import hashlib
from pathlib import Path

from kittisim.sim.scenario import ScenarioConfig


def tree_hash(root: Path, exclude: tuple[str, ...] = ()) -> str:
    """Recursive content hash of a directory tree (path-sensitive)."""
    root = Path(root)
    digest = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        if path.name in exclude:
            continue
        digest.update(str(path.relative_to(root)).encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()


def tiny_config(n_frames: int = 4, **overrides) -> ScenarioConfig:
    """A short scenario with near vehicles, for fast generation tests."""
    defaults = dict(
        total_recorded_frames=n_frames,
        test_frames=max(n_frames - 1, 0),
        val_frames=min(1, n_frames),
        gap_ego_to_fast=12.0,
        gap_fast_to_slow=25.0,
        overtake_trigger_gap=18.0,
        seed=99,
    )
    defaults.update(overrides)
    return ScenarioConfig(**defaults)

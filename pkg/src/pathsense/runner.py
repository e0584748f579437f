"""Headless trial batches and frame replay.

A batch runs trials i = 0..n-1 with seeds seed_base + i, writes one
trajectory file per trial plus an aggregated CSV row, and is byte-for-byte
reproducible: same spec, same files.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

from .control import NoiseParams
from .errors import ParameterError, ValidationError
from .geometry import LightPath, builtin_path, load_path
from .metrics import ConditionRow, condition_row, render_csv
from .rendering import CameraModel, CutoffParams, Frame, render_frame
from .session import Session, SessionConfig, TrajectoryRecord, export_record

__all__ = [
    "RunSpec",
    "RunResult",
    "run_headless",
    "replay_frames",
    "resolve_path",
    "default_data_dir",
]

DATA_DIR_ENV = "PATHSENSE_DATA_DIR"


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "./pathsense-data"))


def resolve_path(spec: str) -> LightPath:
    """A built-in name (path1/path2) or a path JSON file."""
    if spec in ("path1", "path2"):
        return builtin_path(spec)
    with open(spec, encoding="utf-8") as fh:
        return load_path(fh)


@dataclass(frozen=True)
class RunSpec:
    config: SessionConfig
    trials: int = 1
    seed_base: int = 0
    out_dir: Path | None = None  # None: PATHSENSE_DATA_DIR or ./pathsense-data
    condition: str | None = None  # None: "<display>-<controller>"
    bin_width: float = 0.1

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials: must be >= 1, got {self.trials}")
        if self.config.controller not in ("ideal", "noisy"):
            raise ParameterError(
                f"controller: headless batches need a scripted controller, got {self.config.controller!r}"
            )

    @property
    def label(self) -> str:
        return self.condition or f"{self.config.display}-{self.config.controller}"


@dataclass(frozen=True)
class RunResult:
    records: tuple[TrajectoryRecord, ...]
    trajectory_files: tuple[Path, ...]
    csv_file: Path
    row: ConditionRow


def _trial_config(spec: RunSpec, index: int) -> SessionConfig:
    cfg = spec.config
    if cfg.controller != "noisy":
        return cfg
    noise = dataclasses.replace(cfg.noise, seed=spec.seed_base + index)
    return dataclasses.replace(cfg, noise=noise)


def run_headless(spec: RunSpec) -> RunResult:
    """Run the batch, write trajectories and the CSV report, return both."""
    out_dir = Path(spec.out_dir) if spec.out_dir is not None else default_data_dir()
    out_dir.mkdir(parents=True, exist_ok=True)

    records = []
    files = []
    stem = f"{spec.config.path.id}-{spec.config.controller}"
    for i in range(spec.trials):
        session = Session(_trial_config(spec, i))
        session.run_to_completion()
        record = session.record()
        records.append(record)
        path = out_dir / f"{stem}-{i:03d}.jsonl"
        path.write_text(export_record(record), encoding="utf-8")
        files.append(path)

    row = condition_row(spec.label, records, spec.config.path, spec.bin_width)
    csv_file = out_dir / f"{stem}-report.csv"
    csv_file.write_text(render_csv([row]), encoding="utf-8")
    return RunResult(tuple(records), tuple(files), csv_file, row)


def replay_frames(
    record: TrajectoryRecord,
    path: LightPath,
    cam: CameraModel = CameraModel(),
    cut: CutoffParams = CutoffParams(),
) -> list[Frame]:
    """Re-render the view at every recorded pose; pure in record and config."""
    if record.path_id != path.id:
        raise ValidationError(
            f"record was made on path {record.path_id!r}, not {path.id!r}"
        )
    return [render_frame(s.pose, path, cam, cut) for s in record.samples]

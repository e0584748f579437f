"""Trajectory/path similarity measured along the z axis.

Time is replaced by progression along z: samples are pooled into uniform
half-open z-bins, then bin means of x and y are compared against the path
binned the same way from a dense arc-length interpolation.  Deviations are
taken about the path itself, so a constant bias shows up in avg_sd (it
measures separation, not spread about the trial mean; the alternative
reading is available as mode="trial_mean").
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import MetricUndefinedError, ParameterError, ValidationError
from .geometry import LightPath, polyline_of
from .session import TrajectoryRecord

__all__ = [
    "DEFAULT_BIN_WIDTH",
    "REFERENCE_SAMPLES",
    "ZBinnedSeries",
    "MetricsReport",
    "ConditionRow",
    "zbin",
    "zbin_reference",
    "correlation_along_z",
    "avg_sd",
    "transit_time",
    "trial_metrics",
    "aggregate",
    "condition_row",
    "write_csv",
    "render_csv",
    "format_transit",
]

DEFAULT_BIN_WIDTH = 0.1  # cm; 120 bins across the working cube plus the top edge bin
REFERENCE_SAMPLES = 100_000
_EDGE_SNAP = 1e-9  # fraction of a bin: values this close to an edge go up
_DEGENERATE_VAR = 1e-12  # cm^2; below this an axis carries no signal

CSV_COLUMNS = (
    "condition",
    "path_id",
    "n_trials",
    "avg_sd_cm",
    "correlation_pct",
    "transit_mean_s",
    "transit_sd_s",
)


@dataclass(frozen=True)
class ZBinnedSeries:
    """Per-bin x/y means over uniform half-open z-bins [lo, hi).

    Empty bins keep occupancy 0 and a placeholder mean of 0.0; they are
    never interpolated.
    """

    bin_edges: tuple[float, ...]
    x_mean: tuple[float, ...]
    y_mean: tuple[float, ...]
    occupancy: tuple[int, ...]

    def __post_init__(self):
        n = len(self.bin_edges) - 1
        if n < 1:
            raise ValidationError("need at least one bin")
        if any(b <= a for a, b in zip(self.bin_edges[:-1], self.bin_edges[1:])):
            raise ValidationError("bin edges must be strictly increasing")
        for name in ("x_mean", "y_mean", "occupancy"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"{name} must have one entry per bin ({n})")
        if any(c < 0 for c in self.occupancy):
            raise ValidationError("occupancy counts must be non-negative")

    @property
    def n_bins(self) -> int:
        return len(self.bin_edges) - 1

    def nonempty(self) -> np.ndarray:
        return np.asarray(self.occupancy) > 0


@dataclass(frozen=True)
class MetricsReport:
    """Similarity summary for one trial or a pooled condition."""

    avg_sd_cm: float
    correlation_pct: float
    transit_time_s: float  # mean over trials when n_trials > 1
    transit_sd_s: float  # 0.0 for a single trial
    sd_x_cm: float
    sd_y_cm: float
    corr_x_pct: float | None  # None when the path is flat on that axis
    corr_y_pct: float | None
    n_trials: int

    def __post_init__(self):
        if not (-100.0 <= self.correlation_pct <= 100.0):
            raise ValidationError(f"correlation_pct out of [-100, 100]: {self.correlation_pct}")
        if self.avg_sd_cm < 0:
            raise ValidationError(f"avg_sd_cm must be >= 0, got {self.avg_sd_cm}")
        if self.n_trials < 1:
            raise ValidationError("n_trials must be >= 1")
        if self.transit_sd_s < 0:
            raise ValidationError("transit_sd_s must be >= 0")


@dataclass(frozen=True)
class ConditionRow:
    condition: str
    path_id: str
    n_trials: int
    avg_sd_cm: float
    correlation_pct: float
    transit_mean_s: float
    transit_sd_s: float


# --- binning -------------------------------------------------------------------


def _edges_for(path: LightPath, bin_width: float) -> tuple[float, ...]:
    if not (bin_width > 0):
        raise ParameterError(f"bin_width: must be > 0, got {bin_width}")
    zs = [p.z for p in path.points]
    zmin, zmax = min(zs), max(zs)
    # The top edge z == zmax belongs to the bin above it (half-open rule),
    # hence one bin more than fits in the range.
    n_bins = int(math.floor((zmax - zmin) / bin_width + _EDGE_SNAP)) + 1
    return tuple(zmin + bin_width * k for k in range(n_bins + 1))


def _bin_xyz(x: np.ndarray, y: np.ndarray, z: np.ndarray,
             edges: tuple[float, ...]) -> ZBinnedSeries:
    zmin = edges[0]
    width = edges[1] - edges[0]
    n_bins = len(edges) - 1
    idx = np.floor((z - zmin) / width + _EDGE_SNAP).astype(int)
    keep = (idx >= 0) & (idx < n_bins)
    if not keep.any():
        raise MetricUndefinedError("no samples overlap the path z-range")
    idx = idx[keep]
    occ = np.bincount(idx, minlength=n_bins)
    x_sum = np.bincount(idx, weights=x[keep], minlength=n_bins)
    y_sum = np.bincount(idx, weights=y[keep], minlength=n_bins)
    filled = occ > 0
    x_mean = np.zeros(n_bins)
    y_mean = np.zeros(n_bins)
    x_mean[filled] = x_sum[filled] / occ[filled]
    y_mean[filled] = y_sum[filled] / occ[filled]
    return ZBinnedSeries(
        bin_edges=edges,
        x_mean=tuple(float(v) for v in x_mean),
        y_mean=tuple(float(v) for v in y_mean),
        occupancy=tuple(int(c) for c in occ),
    )


def zbin(record: TrajectoryRecord, path: LightPath,
         bin_width: float = DEFAULT_BIN_WIDTH) -> ZBinnedSeries:
    """Pool every sample (all visits, z need not be monotone) into z-bins."""
    edges = _edges_for(path, bin_width)
    pos = np.array([[s.pose.position.x, s.pose.position.y, s.pose.position.z]
                    for s in record.samples])
    return _bin_xyz(pos[:, 0], pos[:, 1], pos[:, 2], edges)


def zbin_reference(path: LightPath, bin_width: float = DEFAULT_BIN_WIDTH,
                   n_samples: int = REFERENCE_SAMPLES) -> ZBinnedSeries:
    """Bin the path itself from a dense arc-uniform interpolation."""
    edges = _edges_for(path, bin_width)
    line = polyline_of(path)
    pts = line.sample_arclengths(np.linspace(0.0, line.length, n_samples))
    return _bin_xyz(pts[:, 0], pts[:, 1], pts[:, 2], edges)


def _check_same_bins(a: ZBinnedSeries, b: ZBinnedSeries) -> None:
    if a.bin_edges != b.bin_edges:
        raise ValidationError("series were binned with different edges")


# --- correlation ------------------------------------------------------------------


def _pearson(a: Sequence[float], b: Sequence[float]) -> float:
    n = len(a)
    ma = math.fsum(a) / n
    mb = math.fsum(b) / n
    da = [v - ma for v in a]
    db = [v - mb for v in b]
    cov = math.fsum(x * y for x, y in zip(da, db))
    va = math.fsum(x * x for x in da)
    vb = math.fsum(y * y for y in db)
    r = cov / math.sqrt(va * vb)
    return max(-1.0, min(1.0, r))


def _axis_correlations(tx, px, ty, py) -> tuple[float | None, float | None]:
    """Per-axis Pearson in percent; a flat path axis is excluded (None).

    A flat trajectory axis against a varying path axis reads as 0: the
    trajectory shows none of the path's variation.
    """
    out = []
    for t, p in ((tx, px), (ty, py)):
        n = len(p)
        mp = math.fsum(p) / n
        vp = math.fsum((v - mp) ** 2 for v in p) / n
        if vp < _DEGENERATE_VAR:
            out.append(None)
            continue
        mt = math.fsum(t) / n
        vt = math.fsum((v - mt) ** 2 for v in t) / n
        out.append(0.0 if vt < _DEGENERATE_VAR else 100.0 * _pearson(t, p))
    cx, cy = out
    if cx is None and cy is None:
        raise MetricUndefinedError("path is flat in both x and y; correlation undefined")
    return cx, cy


def correlation_along_z(traj: ZBinnedSeries, reference: ZBinnedSeries) -> float:
    """Mean of the x and y Pearson correlations over jointly non-empty bins, in %."""
    _check_same_bins(traj, reference)
    joint = traj.nonempty() & reference.nonempty()
    if int(joint.sum()) < 3:
        raise MetricUndefinedError(f"need >= 3 jointly non-empty bins, have {int(joint.sum())}")
    sel = np.flatnonzero(joint)
    tx = [traj.x_mean[i] for i in sel]
    px = [reference.x_mean[i] for i in sel]
    ty = [traj.y_mean[i] for i in sel]
    py = [reference.y_mean[i] for i in sel]
    cx, cy = _axis_correlations(tx, px, ty, py)
    present = [c for c in (cx, cy) if c is not None]
    return math.fsum(present) / len(present)


# --- deviation -------------------------------------------------------------------


def _bin_deviations(trials: Sequence[ZBinnedSeries], reference: ZBinnedSeries,
                    mode: str) -> tuple[list[float], list[float]]:
    """Per-bin RMS deviation in x and y over all trials occupying the bin."""
    ref_filled = reference.nonempty()
    sd_x: list[float] = []
    sd_y: list[float] = []
    for b in range(reference.n_bins):
        if not ref_filled[b]:
            continue
        xs = [t.x_mean[b] for t in trials if t.occupancy[b] > 0]
        if not xs:
            continue
        ys = [t.y_mean[b] for t in trials if t.occupancy[b] > 0]
        if mode == "path":
            cx, cy = reference.x_mean[b], reference.y_mean[b]
        else:  # about the cross-trial mean at this z
            cx = math.fsum(xs) / len(xs)
            cy = math.fsum(ys) / len(ys)
        sd_x.append(math.sqrt(math.fsum((v - cx) ** 2 for v in xs) / len(xs)))
        sd_y.append(math.sqrt(math.fsum((v - cy) ** 2 for v in ys) / len(ys)))
    if not sd_x:
        raise MetricUndefinedError("no bins shared by the trials and the path")
    return sd_x, sd_y


def avg_sd(trials: Sequence[ZBinnedSeries] | ZBinnedSeries,
           reference: ZBinnedSeries, mode: str = "path") -> float:
    """Mean over shared bins of (RMS_x + RMS_y)/2, deviations about the path.

    mode="trial_mean" measures spread about the cross-trial mean per bin
    instead, discarding any common bias.
    """
    if isinstance(trials, ZBinnedSeries):
        trials = [trials]
    if not trials:
        raise ParameterError("trials: need at least one binned trial")
    if mode not in ("path", "trial_mean"):
        raise ParameterError(f"mode: expected 'path' or 'trial_mean', got {mode!r}")
    for t in trials:
        _check_same_bins(t, reference)
    sd_x, sd_y = _bin_deviations(trials, reference, mode)
    per_bin = [(a + b) / 2.0 for a, b in zip(sd_x, sd_y)]
    return math.fsum(per_bin) / len(per_bin)


# --- time ---------------------------------------------------------------------------


def transit_time(record: TrajectoryRecord) -> float:
    """Seconds from start to target; only completed runs have one."""
    if record.outcome != "completed":
        raise MetricUndefinedError(f"no transit time for a run that ended {record.outcome!r}")
    return record.samples[-1].t_ms / 1000.0


def format_transit(mean_s: float, sd_s: float) -> str:
    return f"{mean_s:.1f} ± {sd_s:.1f} s"


# --- aggregation ----------------------------------------------------------------------


def aggregate(records: Sequence[TrajectoryRecord], path: LightPath,
              bin_width: float = DEFAULT_BIN_WIDTH, mode: str = "path") -> MetricsReport:
    """Pool a condition's trials into one report.

    Correlation treats the trials' (trajectory, path) bin pairs as a single
    set; deviations are pooled per bin across trials.  Transit times keep
    their mean and sample SD.
    """
    if not records:
        raise ParameterError("records: need at least one trial")
    reference = zbin_reference(path, bin_width)
    trials = [zbin(r, path, bin_width) for r in records]

    tx: list[float] = []
    px: list[float] = []
    ty: list[float] = []
    py: list[float] = []
    ref_filled = reference.nonempty()
    for t in trials:
        joint = np.flatnonzero(t.nonempty() & ref_filled)
        tx.extend(t.x_mean[i] for i in joint)
        px.extend(reference.x_mean[i] for i in joint)
        ty.extend(t.y_mean[i] for i in joint)
        py.extend(reference.y_mean[i] for i in joint)
    if len(px) < 3:
        raise MetricUndefinedError(f"need >= 3 jointly non-empty bins, have {len(px)}")
    cx, cy = _axis_correlations(tx, px, ty, py)
    present = [c for c in (cx, cy) if c is not None]
    correlation = math.fsum(present) / len(present)

    sd_x, sd_y = _bin_deviations(trials, reference, mode)
    sd_x_mean = math.fsum(sd_x) / len(sd_x)
    sd_y_mean = math.fsum(sd_y) / len(sd_y)
    per_bin = [(a + b) / 2.0 for a, b in zip(sd_x, sd_y)]
    pooled_sd = math.fsum(per_bin) / len(per_bin)

    transits = [transit_time(r) for r in records]
    n = len(transits)
    mean_t = math.fsum(transits) / n
    sd_t = math.sqrt(math.fsum((t - mean_t) ** 2 for t in transits) / (n - 1)) if n > 1 else 0.0

    return MetricsReport(
        avg_sd_cm=pooled_sd,
        correlation_pct=correlation,
        transit_time_s=mean_t,
        transit_sd_s=sd_t,
        sd_x_cm=sd_x_mean,
        sd_y_cm=sd_y_mean,
        corr_x_pct=cx,
        corr_y_pct=cy,
        n_trials=n,
    )


def trial_metrics(record: TrajectoryRecord, path: LightPath,
                  bin_width: float = DEFAULT_BIN_WIDTH, mode: str = "path") -> MetricsReport:
    return aggregate([record], path, bin_width, mode)


def condition_row(condition: str, records: Sequence[TrajectoryRecord], path: LightPath,
                  bin_width: float = DEFAULT_BIN_WIDTH, mode: str = "path") -> ConditionRow:
    report = aggregate(records, path, bin_width, mode)
    return ConditionRow(
        condition=condition,
        path_id=path.id,
        n_trials=report.n_trials,
        avg_sd_cm=report.avg_sd_cm,
        correlation_pct=report.correlation_pct,
        transit_mean_s=report.transit_time_s,
        transit_sd_s=report.transit_sd_s,
    )


def write_csv(rows: Sequence[ConditionRow], out: IO[str]) -> None:
    writer = csv.writer(out)
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r.condition, r.path_id, r.n_trials, repr(r.avg_sd_cm),
                         repr(r.correlation_pct), repr(r.transit_mean_s), repr(r.transit_sd_s)])


def render_csv(rows: Sequence[ConditionRow]) -> str:
    import io

    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()

"""Subjective-view rendering of light points onto the low-resolution frame.

A pinhole camera looks along the pose's local -z axis.  Visible points are
rasterized one point -> one cell with max-compositing, and their intensity is
a steep logistic falloff in euclidean distance from the camera position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ValidationError
from .geometry import LightPath, Pose, Vec3

__all__ = [
    "VISIBILITY_FLOOR",
    "CameraModel",
    "CutoffParams",
    "Frame",
    "depth_cutoff",
    "project_point",
    "render_frame",
]

#: Intensities below this are written as exact zeros (not perceivable).
VISIBILITY_FLOOR = 0.004

# math.exp overflows above ~709.8; the logistic is saturated long before that.
_EXP_CAP = 709.0


@dataclass(frozen=True)
class CameraModel:
    """Pinhole viewport matching the display resolution."""

    grid_w: int = 12
    grid_h: int = 12
    fov_deg: float = 60.0  # full angle, symmetric in both axes
    near: float = 0.05  # cm

    def __post_init__(self):
        if self.grid_w < 1 or self.grid_h < 1:
            raise ParameterError(f"grid_w/grid_h: must be >= 1, got {self.grid_w}x{self.grid_h}")
        if not (0.0 < self.fov_deg < 180.0):
            raise ParameterError(f"fov_deg: must be in (0, 180), got {self.fov_deg}")
        if not (self.near > 0.0):
            raise ParameterError(f"near: must be > 0, got {self.near}")

    @property
    def half_tangent(self) -> float:
        return math.tan(math.radians(self.fov_deg) / 2.0)


@dataclass(frozen=True)
class CutoffParams:
    """Logistic distance falloff: intensity = 1 / (1 + exp(k*(d - inflexion)))."""

    inflexion: float = 2.0  # cm
    steepness: float = 2.5  # 1/cm

    def __post_init__(self):
        if not (self.inflexion > 0.0):
            raise ParameterError(f"inflexion: must be > 0, got {self.inflexion}")
        if not (self.steepness > 0.0):
            raise ParameterError(f"steepness: must be > 0, got {self.steepness}")


@dataclass(frozen=True)
class Frame:
    """Row-major intensity grid, every cell in [0, 1]."""

    width: int
    height: int
    intensities: tuple[float, ...]

    def __post_init__(self):
        if len(self.intensities) != self.width * self.height:
            raise ValidationError(
                f"frame needs {self.width * self.height} cells, got {len(self.intensities)}"
            )
        for v in self.intensities:
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"frame intensity {v!r} outside [0, 1]")

    def at(self, col: int, row: int) -> float:
        return self.intensities[row * self.width + col]

    @staticmethod
    def zero(width: int = 12, height: int = 12) -> "Frame":
        return Frame(width, height, (0.0,) * (width * height))


def depth_cutoff(d: float, p: CutoffParams = CutoffParams()) -> float:
    """Intensity of a point at distance d cm; 0.5 exactly at the inflexion.

    Strictly decreasing; the exponent is capped so the tail underflows to a
    tiny positive number instead of overflowing (ties only beyond ~290 cm
    with default steepness, far outside the scene).
    """
    t = p.steepness * (d - p.inflexion)
    return 1.0 / (1.0 + math.exp(min(t, _EXP_CAP)))


def project_point(pose: Pose, cam: CameraModel, p: Vec3) -> tuple[int, int, float] | None:
    """Project a world point to (col, row, depth along the view axis).

    Returns None when the point is at or behind the near plane, or outside
    the symmetric field-of-view frustum.  Cells follow the floor convention
    cell = floor((ndc + 1) / 2 * grid_dim), with the +1 edge clamped to the
    last index.
    """
    rel = p - pose.position
    local = pose.orientation.conjugate().rotate(rel)
    depth = -local.z
    if depth <= cam.near:
        return None
    half = cam.half_tangent
    ndc_x = local.x / (depth * half)
    ndc_y = local.y / (depth * half)
    if not (-1.0 <= ndc_x <= 1.0 and -1.0 <= ndc_y <= 1.0):
        return None
    col = min(int((ndc_x + 1.0) * 0.5 * cam.grid_w), cam.grid_w - 1)
    row = min(int((ndc_y + 1.0) * 0.5 * cam.grid_h), cam.grid_h - 1)
    return col, row, depth


def render_frame(
    pose: Pose,
    path: LightPath,
    cam: CameraModel = CameraModel(),
    cut: CutoffParams = CutoffParams(),
) -> Frame:
    """Render every path point from the pose; max-compositing per cell."""
    pts = np.array([q.as_tuple() for q in path.points], dtype=float)
    pos = pose.position.as_array()
    rot = pose.orientation.rotation_matrix()

    rel = pts - pos
    local = rel @ rot  # row-wise R^T @ rel: world -> camera frame
    depth = -local[:, 2]
    visible = depth > cam.near

    half = cam.half_tangent
    with np.errstate(divide="ignore", invalid="ignore"):
        ndc = local[:, :2] / (depth[:, None] * half)
    visible &= (np.abs(ndc[:, 0]) <= 1.0) & (np.abs(ndc[:, 1]) <= 1.0)
    if not visible.any():
        return Frame.zero(cam.grid_w, cam.grid_h)

    vis_ndc = ndc[visible]
    cols = np.minimum(((vis_ndc[:, 0] + 1.0) * 0.5 * cam.grid_w).astype(int), cam.grid_w - 1)
    rows = np.minimum(((vis_ndc[:, 1] + 1.0) * 0.5 * cam.grid_h).astype(int), cam.grid_h - 1)

    dist = np.linalg.norm(rel[visible], axis=1)  # euclidean, not depth
    exponent = np.minimum(cut.steepness * (dist - cut.inflexion), _EXP_CAP)
    intensity = 1.0 / (1.0 + np.exp(exponent))

    grid = np.zeros((cam.grid_h, cam.grid_w))
    np.maximum.at(grid, (rows, cols), intensity)
    grid[grid < VISIBILITY_FLOOR] = 0.0
    return Frame(cam.grid_w, cam.grid_h, tuple(float(v) for v in grid.ravel()))

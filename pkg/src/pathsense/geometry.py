"""World geometry: vectors, quaternions, poses, and the parametric light paths.

World frame is right-handed with z up, all lengths in centimeters.  The scene
is a 12 cm cube spanning z in [0, 12] and x, y in [-6, 6], origin at the
bottom center.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import IO, Iterable

import numpy as np

from .errors import ParameterError, ValidationError

__all__ = [
    "CUBE_HEIGHT",
    "CUBE_HALF_WIDTH",
    "Vec3",
    "UnitQuat",
    "Pose",
    "PathParams",
    "LightPath",
    "Polyline",
    "make_path",
    "builtin_path",
    "view_axis",
    "distance_to_target",
    "polyline_of",
    "load_path",
    "save_path",
]

CUBE_HEIGHT = 12.0
CUBE_HALF_WIDTH = 6.0

_UNIT_NORM_TOL = 1e-9
_GEOM_TOL = 1e-9


@dataclass(frozen=True)
class Vec3:
    """Point or direction in the world frame, components in cm."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValidationError(f"Vec3 components must be finite, got {self}")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def distance_to(self, other: "Vec3") -> float:
        return (self - other).norm()

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @staticmethod
    def from_array(a) -> "Vec3":
        return Vec3(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class UnitQuat:
    """Unit quaternion (w, x, y, z) representing a rotation.

    Every constructor and operation that produces a UnitQuat keeps the norm
    within 1e-9 of 1; direct construction with a non-unit norm is rejected.
    """

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if abs(n - 1.0) > _UNIT_NORM_TOL:
            raise ValidationError(f"quaternion norm {n!r} is not 1 within {_UNIT_NORM_TOL}")

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def normalized(w: float, x: float, y: float, z: float) -> "UnitQuat":
        """Build a unit quaternion from arbitrary non-zero components."""
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if n == 0.0 or not math.isfinite(n):
            raise ValidationError("cannot normalize zero or non-finite quaternion")
        return UnitQuat(w / n, x / n, y / n, z / n)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle_deg: float) -> "UnitQuat":
        n = axis.norm()
        if n == 0.0:
            raise ParameterError("axis: rotation axis must be non-zero")
        half = math.radians(angle_deg) / 2.0
        s = math.sin(half) / n
        return UnitQuat.normalized(math.cos(half), axis.x * s, axis.y * s, axis.z * s)

    @staticmethod
    def rotation_between(a: Vec3, b: Vec3) -> "UnitQuat":
        """Minimal rotation taking unit vector a onto unit vector b.

        For antiparallel inputs the 180 degree rotation about a deterministic
        axis orthogonal to a is returned.
        """
        d = a.dot(b)
        if d < -1.0 + 1e-12:
            # Antiparallel: pick the least-aligned coordinate axis for stability.
            helper = Vec3(1.0, 0.0, 0.0) if abs(a.x) <= 0.9 else Vec3(0.0, 1.0, 0.0)
            axis = a.cross(helper)
            return UnitQuat.from_axis_angle(axis, 180.0)
        c = a.cross(b)
        return UnitQuat.normalized(1.0 + d, c.x, c.y, c.z)

    def multiply(self, other: "UnitQuat") -> "UnitQuat":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuat.normalized(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def conjugate(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def rotate(self, v: Vec3) -> Vec3:
        """Rotate vector v by this quaternion (active rotation)."""
        qv = Vec3(self.x, self.y, self.z)
        t = qv.cross(v).scaled(2.0)
        return v + t.scaled(self.w) + qv.cross(t)

    def rotation_matrix(self) -> np.ndarray:
        """3x3 matrix M with M @ v_local = v_world."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=float,
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w, self.x, self.y, self.z)


@dataclass(frozen=True)
class Pose:
    """6-DOF camera/tool state; view axis is the local -z direction."""

    position: Vec3
    orientation: UnitQuat


def view_axis(pose: Pose) -> Vec3:
    """Unit vector the pose is looking along: orientation applied to (0,0,-1)."""
    return pose.orientation.rotate(Vec3(0.0, 0.0, -1.0))


@dataclass(frozen=True)
class PathParams:
    """Parameters for the two built-in path families."""

    kind: str  # "curved" | "helical"
    height: float = CUBE_HEIGHT
    lateral_extent: float = 6.0
    turns: float = 1.5  # helical only
    n_points: int = 40

    def validate(self) -> "PathParams":
        if self.kind not in ("curved", "helical"):
            raise ParameterError(f"kind: expected 'curved' or 'helical', got {self.kind!r}")
        if not (self.height > 0):
            raise ParameterError(f"height: must be > 0, got {self.height}")
        if self.lateral_extent < 0:
            raise ParameterError(f"lateral_extent: must be >= 0, got {self.lateral_extent}")
        if self.kind == "helical" and not (self.turns > 0):
            raise ParameterError(f"turns: must be > 0 for helical paths, got {self.turns}")
        if self.n_points < 2:
            raise ParameterError(f"n_points: must be >= 2, got {self.n_points}")
        if self.height > CUBE_HEIGHT + _GEOM_TOL:
            raise ParameterError(f"height: exceeds the {CUBE_HEIGHT} cm cube, got {self.height}")
        if self.lateral_extent / 2.0 > CUBE_HALF_WIDTH + _GEOM_TOL:
            raise ParameterError(
                f"lateral_extent: amplitude {self.lateral_extent / 2.0} exceeds the cube half-width"
            )
        return self


@dataclass(frozen=True)
class LightPath:
    """Ordered light points from a start (top) to a target (bottom).

    Invariants: at least two points, the first has the maximal z and the last
    the minimal z, every point lies inside the cube, and consecutive points
    are distinct.
    """

    id: str
    points: tuple[Vec3, ...]

    start_index: int = field(init=False, default=0)

    def __post_init__(self):
        pts = self.points
        if len(pts) < 2:
            raise ValidationError(f"path {self.id!r}: needs >= 2 points, got {len(pts)}")
        zs = [p.z for p in pts]
        if pts[0].z < max(zs) - _GEOM_TOL:
            raise ValidationError(f"path {self.id!r}: first point must have the maximal z")
        if pts[-1].z > min(zs) + _GEOM_TOL:
            raise ValidationError(f"path {self.id!r}: last point must have the minimal z")
        for i, p in enumerate(pts):
            inside = (
                abs(p.x) <= CUBE_HALF_WIDTH + _GEOM_TOL
                and abs(p.y) <= CUBE_HALF_WIDTH + _GEOM_TOL
                and -_GEOM_TOL <= p.z <= CUBE_HEIGHT + _GEOM_TOL
            )
            if not inside:
                raise ValidationError(f"path {self.id!r}: point {i} {p.as_tuple()} outside the cube")
        for i in range(len(pts) - 1):
            if pts[i].distance_to(pts[i + 1]) == 0.0:
                raise ValidationError(f"path {self.id!r}: points {i} and {i + 1} coincide")

    @property
    def target_index(self) -> int:
        return len(self.points) - 1

    @property
    def start(self) -> Vec3:
        return self.points[0]

    @property
    def target(self) -> Vec3:
        return self.points[-1]


def distance_to_target(pose: Pose, path: LightPath) -> float:
    """Euclidean distance in cm from the pose position to the path target."""
    return pose.position.distance_to(path.target)


# --- parametric path construction -------------------------------------------

# Dense parameter sampling used to invert arc length; resolution chosen so the
# residual spacing error is far below the 1% uniformity contract.
_DENSE_SAMPLES = 50_001


def _curve_xyz(params: PathParams, t: np.ndarray) -> np.ndarray:
    """Evaluate the analytic curve at parameters t in [0,1], top to bottom."""
    amp = params.lateral_extent / 2.0
    z = params.height * (1.0 - t)
    if params.kind == "curved":
        # Single smooth S-bend in x with a mild secondary bend in y.
        x = amp * np.sin(np.pi * t)
        y = 0.3 * amp * np.sin(2.0 * np.pi * t)
    else:
        ang = 2.0 * np.pi * params.turns * t
        x = amp * np.cos(ang)
        y = amp * np.sin(ang)
    return np.column_stack([x, y, z])


def make_path(params: PathParams, id: str | None = None) -> LightPath:
    """Sample n_points evenly spaced by arc length along the analytic curve."""
    params.validate()
    t_dense = np.linspace(0.0, 1.0, _DENSE_SAMPLES)
    xyz = _curve_xyz(params, t_dense)
    seg = np.linalg.norm(np.diff(xyz, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, cum[-1], params.n_points)
    t_pts = np.interp(targets, cum, t_dense)
    t_pts[0], t_pts[-1] = 0.0, 1.0  # pin the endpoints exactly
    pts = _curve_xyz(params, t_pts)
    if id is None:
        id = _default_id(params)
    return LightPath(id=id, points=tuple(Vec3.from_array(row) for row in pts))


def _default_id(params: PathParams) -> str:
    base = f"{params.kind}-h{params.height:g}-e{params.lateral_extent:g}-n{params.n_points}"
    if params.kind == "helical":
        base += f"-t{params.turns:g}"
    return base


#: The two named paths served by default: a curved S-bend and a 1.5-turn helix.
BUILTIN_PATH_PARAMS: dict[str, PathParams] = {
    "path1": PathParams(kind="curved"),
    "path2": PathParams(kind="helical"),
}


def builtin_path(name: str) -> LightPath:
    """Return one of the named default paths (path1 curved, path2 helical)."""
    try:
        params = BUILTIN_PATH_PARAMS[name]
    except KeyError:
        raise ParameterError(
            f"path: unknown built-in {name!r}, expected one of {sorted(BUILTIN_PATH_PARAMS)}"
        ) from None
    return replace(make_path(params), id=name)


# --- polyline arc-length index -----------------------------------------------


class Polyline:
    """Arc-length queries over a path's point sequence."""

    def __init__(self, points: Iterable[Vec3]):
        self.pts = np.array([p.as_tuple() for p in points], dtype=float)
        seg = np.diff(self.pts, axis=0)
        self.seg_len = np.linalg.norm(seg, axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self._seg_dir = seg / self.seg_len[:, None]

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    def _segment_of(self, s: float) -> tuple[int, float]:
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum, s, side="right")) - 1
        i = min(max(i, 0), len(self.seg_len) - 1)
        return i, s - self.cum[i]

    def point_at(self, s: float) -> Vec3:
        """Position at arc length s, clamped to [0, length]."""
        i, ds = self._segment_of(s)
        p = self.pts[i] + self._seg_dir[i] * ds
        return Vec3.from_array(p)

    def tangent_at(self, s: float) -> Vec3:
        """Unit tangent of the segment containing arc length s."""
        i, _ = self._segment_of(s)
        return Vec3.from_array(self._seg_dir[i])

    def project(self, p: Vec3) -> float:
        """Arc length of the polyline point nearest to p (first on ties)."""
        q = p.as_array()
        a = self.pts[:-1]
        rel = q[None, :] - a
        t = np.einsum("ij,ij->i", rel, self._seg_dir) / self.seg_len
        t = np.clip(t, 0.0, 1.0)
        closest = a + t[:, None] * self._seg_dir * self.seg_len[:, None]
        d2 = np.einsum("ij,ij->i", closest - q[None, :], closest - q[None, :])
        i = int(np.argmin(d2))
        return float(self.cum[i] + t[i] * self.seg_len[i])

    def sample_arclengths(self, s: np.ndarray) -> np.ndarray:
        """Vectorized point_at: (n,) arc lengths -> (n,3) positions."""
        s = np.clip(s, 0.0, self.length)
        out = np.empty((len(s), 3))
        for k in range(3):
            out[:, k] = np.interp(s, self.cum, self.pts[:, k])
        return out


@lru_cache(maxsize=64)
def polyline_of(path: LightPath) -> Polyline:
    """Cached arc-length index for a path (LightPath is immutable)."""
    return Polyline(path.points)


# --- path file I/O -----------------------------------------------------------


def save_path(path: LightPath, fp: IO[str]) -> None:
    """Write a path as JSON {id, points: [[x,y,z], ...]}."""
    json.dump({"id": path.id, "points": [list(p.as_tuple()) for p in path.points]}, fp)
    fp.write("\n")


def load_path(source: IO[str] | str | bytes) -> LightPath:
    """Parse and validate a path JSON object."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise ValidationError(f"path file is not valid JSON: {e}") from e
    if not isinstance(obj, dict) or "id" not in obj or "points" not in obj:
        raise ValidationError("path file must be an object with 'id' and 'points'")
    pts = obj["points"]
    if not isinstance(pts, list):
        raise ValidationError("'points' must be a list of [x,y,z] triples")
    out = []
    for i, row in enumerate(pts):
        if not isinstance(row, list) or len(row) != 3:
            raise ValidationError(f"point {i} must be an [x,y,z] triple")
        out.append(Vec3(float(row[0]), float(row[1]), float(row[2])))
    return LightPath(id=str(obj["id"]), points=tuple(out))

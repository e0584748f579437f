"""Wire messages: type-discriminated JSON objects, one per line, UTF-8.

Client to server: start, input, pose, abort.  Server to client: event,
frame, metrics, error.  Serialization is canonical (fixed field order,
compact separators) so transcripts can be compared byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ProtocolError
from .geometry import LightPath, Pose, UnitQuat, Vec3

__all__ = [
    "StartMessage",
    "InputMessage",
    "PoseMessage",
    "AbortMessage",
    "EventMessage",
    "FrameMessage",
    "MetricsMessage",
    "ErrorMessage",
    "Message",
    "parse_message",
    "serialize_message",
]

_GRID_CELLS = 144


@dataclass(frozen=True)
class StartMessage:
    """Opens a session; exactly one of path_id or path (inline points)."""

    path_id: str | None = None
    path: tuple[tuple[float, float, float], ...] | None = None
    display: str = "vdu"
    controller: str = "ideal"
    seed: int | None = None
    speed: float = 2.0
    timeout_s: float = 300.0
    target_radius: float = 0.5
    tremor_sigma: float = 0.15
    drift_theta: float = 0.5
    drift_sigma: float = 0.3
    mouse_sensitivity: float = 0.1
    decimation: int = 4
    lockstep: bool = False  # one tick per pose message (deterministic replay)
    pace: bool = True  # False: free-run the clock (tests, transcript capture)

    def __post_init__(self):
        if (self.path_id is None) == (self.path is None):
            raise ProtocolError("start needs exactly one of path_id or path")
        if self.decimation < 1:
            raise ProtocolError(f"decimation must be >= 1, got {self.decimation}")

    def inline_path(self, fallback_id: str = "inline") -> LightPath | None:
        if self.path is None:
            return None
        return LightPath(id=fallback_id, points=tuple(Vec3(*p) for p in self.path))


@dataclass(frozen=True)
class InputMessage:
    """Raw manual input: held direction plus accumulated pointer deltas.

    Deltas are device counts; the server applies mouse sensitivity.
    """

    forward: int = 0
    dyaw: float = 0.0
    dpitch: float = 0.0

    def __post_init__(self):
        if self.forward not in (-1, 0, 1):
            raise ProtocolError(f"forward must be -1, 0 or 1, got {self.forward!r}")


@dataclass(frozen=True)
class PoseMessage:
    pos: tuple[float, float, float]
    quat: tuple[float, float, float, float]

    def __post_init__(self):
        if len(self.pos) != 3 or len(self.quat) != 4:
            raise ProtocolError("pose needs pos[3] and quat[4]")
        if not all(math.isfinite(v) for v in (*self.pos, *self.quat)):
            raise ProtocolError("pose components must be finite")

    def to_pose(self) -> Pose:
        w, x, y, z = self.quat
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(n - 1.0) > 1e-6:
            raise ProtocolError(f"quat norm {n} too far from 1")
        return Pose(Vec3(*self.pos), UnitQuat.normalized(w, x, y, z))


@dataclass(frozen=True)
class AbortMessage:
    pass


@dataclass(frozen=True)
class EventMessage:
    kind: str  # started | target_reached | aborted
    t_ms: int

    def __post_init__(self):
        if self.kind not in ("started", "target_reached", "aborted"):
            raise ProtocolError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class FrameMessage:
    t_ms: int
    grid: tuple[float, ...]

    def __post_init__(self):
        if len(self.grid) != _GRID_CELLS:
            raise ProtocolError(f"grid must hold {_GRID_CELLS} cells, got {len(self.grid)}")
        if any(not (0.0 <= v <= 1.0) for v in self.grid):
            raise ProtocolError("grid values must lie in [0, 1]")


@dataclass(frozen=True)
class MetricsMessage:
    """Single-run summary; fields are null when the metric is undefined."""

    avg_sd_cm: float | None
    correlation_pct: float | None
    transit_time_s: float | None


@dataclass(frozen=True)
class ErrorMessage:
    message: str


Message = (
    StartMessage
    | InputMessage
    | PoseMessage
    | AbortMessage
    | EventMessage
    | FrameMessage
    | MetricsMessage
    | ErrorMessage
)


def _require(obj: dict, key: str, kinds, what: str):
    if key not in obj:
        raise ProtocolError(f"{what} message missing {key!r}")
    v = obj[key]
    if kinds is not None and (not isinstance(v, kinds) or isinstance(v, bool)):
        raise ProtocolError(f"{what}.{key} has the wrong type")
    return v


def _floats(values, n: int, what: str) -> tuple[float, ...]:
    if not isinstance(values, list) or len(values) != n:
        raise ProtocolError(f"{what} must be a list of {n} numbers")
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ProtocolError(f"{what} must contain numbers only")
        out.append(float(v))
    return tuple(out)


def _parse_start(obj: dict) -> StartMessage:
    kw: dict = {}
    if "path_id" in obj and obj["path_id"] is not None:
        kw["path_id"] = str(obj["path_id"])
    if "path" in obj and obj["path"] is not None:
        pts = obj["path"]
        if not isinstance(pts, list) or len(pts) < 2:
            raise ProtocolError("start.path must list at least two points")
        kw["path"] = tuple(_floats(p, 3, "start.path point") for p in pts)
    for key, caster in (
        ("display", str), ("controller", str), ("speed", float), ("timeout_s", float),
        ("target_radius", float), ("tremor_sigma", float), ("drift_theta", float),
        ("drift_sigma", float), ("mouse_sensitivity", float), ("decimation", int),
    ):
        if key in obj:
            try:
                kw[key] = caster(obj[key])
            except (TypeError, ValueError):
                raise ProtocolError(f"start.{key} has the wrong type") from None
    if "seed" in obj and obj["seed"] is not None:
        if isinstance(obj["seed"], bool) or not isinstance(obj["seed"], int):
            raise ProtocolError("start.seed must be an integer")
        kw["seed"] = obj["seed"]
    for key in ("lockstep", "pace"):
        if key in obj:
            if not isinstance(obj[key], bool):
                raise ProtocolError(f"start.{key} must be a boolean")
            kw[key] = obj[key]
    return StartMessage(**kw)


def parse_message(text: str | bytes) -> Message:
    """Parse one line; raises ProtocolError on anything malformed."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"malformed JSON: {e.msg}") from None
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object")
    mtype = obj.get("type")
    if mtype == "start":
        return _parse_start(obj)
    if mtype == "input":
        fwd = _require(obj, "forward", int, "input")
        return InputMessage(
            forward=fwd,
            dyaw=float(_require(obj, "dyaw", (int, float), "input")),
            dpitch=float(_require(obj, "dpitch", (int, float), "input")),
        )
    if mtype == "pose":
        return PoseMessage(
            pos=_floats(_require(obj, "pos", None, "pose"), 3, "pose.pos"),
            quat=_floats(_require(obj, "quat", None, "pose"), 4, "pose.quat"),
        )
    if mtype == "abort":
        return AbortMessage()
    if mtype == "event":
        return EventMessage(
            kind=str(_require(obj, "kind", str, "event")),
            t_ms=_require(obj, "t_ms", int, "event"),
        )
    if mtype == "frame":
        return FrameMessage(
            t_ms=_require(obj, "t_ms", int, "frame"),
            grid=_floats(_require(obj, "grid", None, "frame"), _GRID_CELLS, "frame.grid"),
        )
    if mtype == "metrics":
        out = {}
        for key in ("avg_sd_cm", "correlation_pct", "transit_time_s"):
            v = obj.get(key)
            if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise ProtocolError(f"metrics.{key} must be a number or null")
            out[key] = None if v is None else float(v)
        return MetricsMessage(**out)
    if mtype == "error":
        return ErrorMessage(message=str(_require(obj, "message", str, "error")))
    raise ProtocolError(f"unknown message type {mtype!r}")


def _dump(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def serialize_message(msg: Message) -> str:
    """Canonical one-line JSON for any message."""
    if isinstance(msg, StartMessage):
        obj: dict = {"type": "start"}
        if msg.path_id is not None:
            obj["path_id"] = msg.path_id
        if msg.path is not None:
            obj["path"] = [list(p) for p in msg.path]
        obj.update(
            display=msg.display, controller=msg.controller, speed=msg.speed,
            timeout_s=msg.timeout_s, target_radius=msg.target_radius,
            tremor_sigma=msg.tremor_sigma, drift_theta=msg.drift_theta,
            drift_sigma=msg.drift_sigma, mouse_sensitivity=msg.mouse_sensitivity,
            decimation=msg.decimation, lockstep=msg.lockstep, pace=msg.pace,
        )
        if msg.seed is not None:
            obj["seed"] = msg.seed
        return _dump(obj)
    if isinstance(msg, InputMessage):
        return _dump({"type": "input", "forward": msg.forward,
                      "dyaw": msg.dyaw, "dpitch": msg.dpitch})
    if isinstance(msg, PoseMessage):
        return _dump({"type": "pose", "pos": list(msg.pos), "quat": list(msg.quat)})
    if isinstance(msg, AbortMessage):
        return _dump({"type": "abort"})
    if isinstance(msg, EventMessage):
        return _dump({"type": "event", "kind": msg.kind, "t_ms": msg.t_ms})
    if isinstance(msg, FrameMessage):
        return _dump({"type": "frame", "t_ms": msg.t_ms, "grid": list(msg.grid)})
    if isinstance(msg, MetricsMessage):
        return _dump({"type": "metrics", "avg_sd_cm": msg.avg_sd_cm,
                      "correlation_pct": msg.correlation_pct,
                      "transit_time_s": msg.transit_time_s})
    if isinstance(msg, ErrorMessage):
        return _dump({"type": "error", "message": msg.message})
    raise ProtocolError(f"cannot serialize {type(msg).__name__}")

"""Experiment state machine: logical 5 ms clock, tick loop, trajectory records.

A session owns one controller and one path.  Each tick advances the logical
clock (never the wall clock), applies the controller, optionally renders a
frame, appends a pose sample, and checks the target/timeout rules.  Records
serialize as JSON lines: one header object, then one sample object per line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO

from .control import (
    ControlCommand,
    InputAccumulator,
    ManualParams,
    NoiseParams,
    NoisyState,
    PoseLatch,
    make_noisy_state,
    step_ideal,
    step_manual,
    step_noisy,
)
from .errors import ParameterError, ParseError, StateError, ValidationError
from .geometry import LightPath, Pose, UnitQuat, Vec3, distance_to_target
from .rendering import CameraModel, CutoffParams, Frame, render_frame

__all__ = [
    "DISPLAYS",
    "CONTROLLERS",
    "SessionConfig",
    "SessionEvent",
    "TickResult",
    "TrajectorySample",
    "TrajectoryRecord",
    "Session",
    "export_record",
    "parse_record",
]

DISPLAYS = ("tdu", "vdu")
CONTROLLERS = ("manual", "external", "ideal", "noisy")

# Slack on the target-radius comparison: positions accumulate about one ulp
# of rounding per tick, so an exact boundary hit can read a hair outside.
_TARGET_EPS = 1e-9

PHASE_IDLE = "idle"
PHASE_RUNNING = "running"
PHASE_COMPLETED = "completed"
PHASE_ABORTED = "aborted"


@dataclass(frozen=True)
class SessionConfig:
    path: LightPath
    display: str = "vdu"
    controller: str = "ideal"
    tick_ms: int = 5
    target_radius: float = 0.5  # cm
    timeout_s: float = 300.0
    camera: CameraModel = CameraModel()
    cutoff: CutoffParams = CutoffParams()
    speed: float = 2.0  # cm/s for the scripted followers
    manual: ManualParams = ManualParams()
    noise: NoiseParams = NoiseParams()
    render_frames: bool = True  # headless metric runs skip rendering

    def __post_init__(self):
        if self.display not in DISPLAYS:
            raise ParameterError(f"display: expected one of {DISPLAYS}, got {self.display!r}")
        if self.controller not in CONTROLLERS:
            raise ParameterError(f"controller: expected one of {CONTROLLERS}, got {self.controller!r}")
        if not (isinstance(self.tick_ms, int) and self.tick_ms > 0):
            raise ParameterError(f"tick_ms: must be a positive integer, got {self.tick_ms!r}")
        if not (self.target_radius > 0):
            raise ParameterError(f"target_radius: must be > 0, got {self.target_radius}")
        if not (self.timeout_s > 0):
            raise ParameterError(f"timeout_s: must be > 0, got {self.timeout_s}")
        if not (self.speed > 0):
            raise ParameterError(f"speed: must be > 0, got {self.speed}")

    @property
    def seed(self) -> int | None:
        return self.noise.seed if self.controller == "noisy" else None


@dataclass(frozen=True)
class TrajectorySample:
    t_ms: int
    pose: Pose


@dataclass(frozen=True)
class SessionEvent:
    kind: str  # "started" | "target_reached" | "aborted"
    t_ms: int


@dataclass(frozen=True)
class TickResult:
    frame: Frame | None
    events: tuple[SessionEvent, ...]


@dataclass(frozen=True)
class TrajectoryRecord:
    """Recorded run: pose samples on the logical clock plus a config summary."""

    path_id: str
    controller: str
    display: str
    tick_ms: int
    target_radius: float
    seed: int | None
    outcome: str  # "completed" | "aborted"
    samples: tuple[TrajectorySample, ...]

    def __post_init__(self):
        if self.outcome not in (PHASE_COMPLETED, PHASE_ABORTED):
            raise ValidationError(f"record outcome must be terminal, got {self.outcome!r}")
        if not self.samples:
            raise ValidationError("record must contain at least the t=0 sample")
        if self.samples[0].t_ms != 0:
            raise ValidationError(f"first sample must be at t=0, got {self.samples[0].t_ms}")
        for a, b in zip(self.samples[:-1], self.samples[1:]):
            if b.t_ms - a.t_ms != self.tick_ms:
                raise ValidationError(
                    f"samples at {a.t_ms} and {b.t_ms} ms are not {self.tick_ms} ms apart"
                )

    @property
    def duration_ms(self) -> int:
        return self.samples[-1].t_ms

    def positions(self):
        return [s.pose.position for s in self.samples]


class Session:
    """One experiment run; start once, tick until a terminal phase."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.phase = PHASE_IDLE
        self.clock_ms = 0
        self.pose: Pose | None = None
        self.samples: list[TrajectorySample] = []
        self.inputs = InputAccumulator()
        self.pose_latch = PoseLatch()
        self._noisy_state: NoisyState | None = None
        self._terminal_event: SessionEvent | None = None

    # -- lifecycle -------------------------------------------------------

    def start(self) -> None:
        """Place the camera at the path start looking straight down; record t=0."""
        if self.phase != PHASE_IDLE:
            raise StateError(f"cannot start a session in phase {self.phase!r}")
        self.pose = Pose(self.config.path.start, UnitQuat.identity())
        self.clock_ms = 0
        self.samples = [TrajectorySample(0, self.pose)]
        if self.config.controller == "noisy":
            self._noisy_state = make_noisy_state(self.config.noise)
        self.phase = PHASE_RUNNING

    def tick(self, cmd: ControlCommand | None = None) -> TickResult:
        """Advance one logical tick; cmd feeds the manual controller only."""
        if self.phase != PHASE_RUNNING:
            raise StateError(f"cannot tick a session in phase {self.phase!r}")
        cfg = self.config
        self.clock_ms += cfg.tick_ms
        dt = cfg.tick_ms / 1000.0

        kind = cfg.controller
        if kind == "manual":
            if cmd is None:
                forward, dyaw, dpitch = self.inputs.drain()
                sens = cfg.manual.mouse_sensitivity
                cmd = ControlCommand(forward, dyaw * sens, dpitch * sens)
            self.pose = step_manual(self.pose, cmd, cfg.manual, dt)
        elif kind == "external":
            latched = self.pose_latch.latest()
            if latched is not None:
                self.pose = latched
        elif kind == "ideal":
            self.pose = step_ideal(self.pose, cfg.path, cfg.speed, dt)
        else:
            self.pose = step_noisy(self.pose, cfg.path, cfg.speed, cfg.noise, dt, self._noisy_state)

        frame = render_frame(self.pose, cfg.path, cfg.camera, cfg.cutoff) if cfg.render_frames else None
        self.samples.append(TrajectorySample(self.clock_ms, self.pose))

        events: list[SessionEvent] = []
        if distance_to_target(self.pose, cfg.path) <= cfg.target_radius + _TARGET_EPS:
            self.phase = PHASE_COMPLETED
            self._terminal_event = SessionEvent("target_reached", self.clock_ms)
            events.append(self._terminal_event)
        elif self.clock_ms >= int(cfg.timeout_s * 1000):
            self.phase = PHASE_ABORTED
            self._terminal_event = SessionEvent("aborted", self.clock_ms)
            events.append(self._terminal_event)
        return TickResult(frame=frame, events=tuple(events))

    def render_now(self) -> Frame:
        """View from the current pose without advancing the clock."""
        if self.pose is None:
            raise StateError("no pose before start")
        cfg = self.config
        return render_frame(self.pose, cfg.path, cfg.camera, cfg.cutoff)

    def abort(self) -> SessionEvent:
        """Terminate a running session early (client request or disconnect)."""
        if self.phase != PHASE_RUNNING:
            raise StateError(f"cannot abort a session in phase {self.phase!r}")
        self.phase = PHASE_ABORTED
        self._terminal_event = SessionEvent("aborted", self.clock_ms)
        return self._terminal_event

    def run_to_completion(self, max_ticks: int | None = None) -> SessionEvent:
        """Drive a scripted session until its terminal event (headless use)."""
        if self.config.controller in ("manual", "external"):
            raise StateError("run_to_completion needs a scripted controller (ideal or noisy)")
        if self.phase == PHASE_IDLE:
            self.start()
        ticks = 0
        while self.phase == PHASE_RUNNING:
            result = self.tick()
            ticks += 1
            if max_ticks is not None and ticks >= max_ticks and not result.events:
                raise StateError(f"no terminal event within {max_ticks} ticks")
        return self._terminal_event

    @property
    def terminal_event(self) -> SessionEvent | None:
        return self._terminal_event

    def record(self) -> TrajectoryRecord:
        if self.phase not in (PHASE_COMPLETED, PHASE_ABORTED):
            raise StateError(f"no record before a terminal phase, currently {self.phase!r}")
        cfg = self.config
        return TrajectoryRecord(
            path_id=cfg.path.id,
            controller=cfg.controller,
            display=cfg.display,
            tick_ms=cfg.tick_ms,
            target_radius=cfg.target_radius,
            seed=cfg.seed,
            outcome=self.phase,
            samples=tuple(self.samples),
        )


# --- record serialization ----------------------------------------------------


def export_record(record: TrajectoryRecord) -> str:
    """Serialize as JSON lines: header line then one line per sample."""
    header = {
        "path_id": record.path_id,
        "controller": record.controller,
        "display": record.display,
        "tick_ms": record.tick_ms,
        "target_radius": record.target_radius,
        "outcome": record.outcome,
    }
    if record.seed is not None:
        header["seed"] = record.seed
    lines = [json.dumps(header, separators=(",", ":"))]
    for s in record.samples:
        p, q = s.pose.position, s.pose.orientation
        lines.append(
            json.dumps(
                {"t_ms": s.t_ms, "pos": [p.x, p.y, p.z], "quat": [q.w, q.x, q.y, q.z]},
                separators=(",", ":"),
            )
        )
    return "\n".join(lines) + "\n"


def export_session(session: Session) -> str:
    return export_record(session.record())


def _parse_sample(obj: dict, lineno: int) -> TrajectorySample:
    try:
        t_ms = obj["t_ms"]
        pos = obj["pos"]
        quat = obj["quat"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"sample missing field {e}", line=lineno) from None
    if not isinstance(t_ms, int):
        raise ParseError(f"t_ms must be an integer, got {t_ms!r}", line=lineno)
    if not (isinstance(pos, list) and len(pos) == 3):
        raise ParseError("pos must be [x, y, z]", line=lineno)
    if not (isinstance(quat, list) and len(quat) == 4):
        raise ParseError("quat must be [w, x, y, z]", line=lineno)
    try:
        w, x, y, z = (float(c) for c in quat)
        try:
            q = UnitQuat(w, x, y, z)  # verbatim keeps round trips lossless
        except ValidationError:
            if abs(math.sqrt(w * w + x * x + y * y + z * z) - 1.0) > 1e-6:
                raise
            q = UnitQuat.normalized(w, x, y, z)
        pose = Pose(Vec3(float(pos[0]), float(pos[1]), float(pos[2])), q)
    except (ValidationError, ValueError, TypeError) as e:
        raise ParseError(f"bad pose: {e}", line=lineno) from None
    return TrajectorySample(t_ms, pose)


def parse_record(source: IO[str] | str | bytes) -> TrajectoryRecord:
    """Parse a trajectory file; errors carry the offending 1-based line number."""
    data = source.read() if hasattr(source, "read") else source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = data.splitlines()
    if not lines:
        raise ParseError("empty record file", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ParseError(f"bad header JSON: {e.msg}", line=1) from None
    if not isinstance(header, dict):
        raise ParseError("header must be a JSON object", line=1)
    required = ("path_id", "controller", "display", "tick_ms", "target_radius", "outcome")
    missing = [k for k in required if k not in header]
    if missing:
        raise ParseError(f"header missing {missing}", line=1)

    samples = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"bad sample JSON: {e.msg}", line=i) from None
        samples.append(_parse_sample(obj, i))
    try:
        return TrajectoryRecord(
            path_id=str(header["path_id"]),
            controller=str(header["controller"]),
            display=str(header["display"]),
            tick_ms=int(header["tick_ms"]),
            target_radius=float(header["target_radius"]),
            seed=int(header["seed"]) if "seed" in header else None,
            outcome=str(header["outcome"]),
            samples=tuple(samples),
        )
    except ValidationError as e:
        raise ParseError(str(e), line=1) from None

"""Per-tick pose controllers: manual steering, path followers, external poses.

The manual stepper applies mouse-look rotations (yaw about world z, pitch
about the local x axis, no roll) and integrates forward motion along the
resulting view axis.  The ideal follower walks the path polyline by arc
length; the noisy follower adds an Ornstein-Uhlenbeck drift plus white
tremor in x and y on top of it.  External poses arrive through a
last-writer-wins latch that stands in for a hardware tracker stream.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ValidationError
from .geometry import LightPath, Pose, UnitQuat, Vec3, polyline_of, view_axis

__all__ = [
    "ControlCommand",
    "ManualParams",
    "NoiseParams",
    "ExternalPoseSample",
    "NoisyState",
    "step_manual",
    "step_ideal",
    "step_noisy",
    "make_noisy_state",
    "accept_external_pose",
    "PoseLatch",
    "InputAccumulator",
    "tangent_orientation",
]

_MAX_TURN_PER_TICK_DEG = 45.0
_QUAT_ACCEPT_TOL = 1e-6


@dataclass(frozen=True)
class ControlCommand:
    """One tick of manual input; rotation deltas are clamped to +-45 degrees."""

    forward: int = 0  # -1 backward, 0 idle, +1 forward
    dyaw: float = 0.0  # degrees
    dpitch: float = 0.0  # degrees

    def __post_init__(self):
        if self.forward not in (-1, 0, 1):
            raise ParameterError(f"forward: must be -1, 0 or +1, got {self.forward!r}")
        clamp = _MAX_TURN_PER_TICK_DEG
        object.__setattr__(self, "dyaw", max(-clamp, min(clamp, float(self.dyaw))))
        object.__setattr__(self, "dpitch", max(-clamp, min(clamp, float(self.dpitch))))


@dataclass(frozen=True)
class ManualParams:
    linear_speed: float = 2.0  # cm/s
    mouse_sensitivity: float = 0.1  # degrees per unit mouse delta

    def __post_init__(self):
        if not (self.linear_speed > 0):
            raise ParameterError(f"linear_speed: must be > 0, got {self.linear_speed}")
        if self.mouse_sensitivity < 0:
            raise ParameterError(f"mouse_sensitivity: must be >= 0, got {self.mouse_sensitivity}")


@dataclass(frozen=True)
class NoiseParams:
    """Hand-instability model: white tremor plus mean-reverting drift."""

    tremor_sigma: float = 0.15  # cm per sqrt(s), per axis
    drift_theta: float = 0.5  # 1/s mean reversion
    drift_sigma: float = 0.3  # cm per sqrt(s)
    seed: int = 0

    def __post_init__(self):
        for name in ("tremor_sigma", "drift_theta", "drift_sigma"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name}: must be >= 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class ExternalPoseSample:
    pose: Pose
    source_time_ms: int = 0


def step_manual(pose: Pose, cmd: ControlCommand, params: ManualParams, dt: float) -> Pose:
    """Advance a manually steered pose by one tick of dt seconds."""
    if not (dt > 0):
        raise ParameterError(f"dt: must be > 0, got {dt}")
    q = pose.orientation
    if cmd.dyaw != 0.0:
        q = UnitQuat.from_axis_angle(Vec3(0.0, 0.0, 1.0), cmd.dyaw).multiply(q)
    if cmd.dpitch != 0.0:
        q = q.multiply(UnitQuat.from_axis_angle(Vec3(1.0, 0.0, 0.0), cmd.dpitch))
    position = pose.position
    if cmd.forward != 0:
        step = cmd.forward * params.linear_speed * dt
        position = position + view_axis(Pose(position, q)).scaled(step)
    return Pose(position, q)


def tangent_orientation(tangent: Vec3) -> UnitQuat:
    """Orientation whose view axis equals the given unit tangent (no roll choice)."""
    return UnitQuat.rotation_between(Vec3(0.0, 0.0, -1.0), tangent)


def step_ideal(pose: Pose, path: LightPath, speed: float, dt: float) -> Pose:
    """Advance along the path polyline by speed*dt, clamping at the target.

    The current progress is the arc length of the polyline point nearest to
    the pose; the returned pose sits on the polyline looking along the local
    tangent.
    """
    if not (speed > 0):
        raise ParameterError(f"speed: must be > 0, got {speed}")
    if dt == 0:
        return pose
    line = polyline_of(path)
    s = line.project(pose.position)
    s_next = min(s + speed * dt, line.length)
    return Pose(line.point_at(s_next), tangent_orientation(line.tangent_at(s_next)))


@dataclass
class NoisyState:
    """Mutable companion of step_noisy: RNG stream, drift state, clean pose.

    The un-noised follower pose is tracked here so the perturbation never
    contaminates arc-length progression; the pose argument of step_noisy
    seeds it on the first call.
    """

    rng: np.random.Generator
    drift: np.ndarray = field(default_factory=lambda: np.zeros(2))
    clean_pose: Pose | None = None


def make_noisy_state(noise: NoiseParams) -> NoisyState:
    """Seeded state for a noisy run; PCG64 keeps streams stable across releases."""
    return NoisyState(rng=np.random.Generator(np.random.PCG64(noise.seed)))


def step_noisy(
    pose: Pose,
    path: LightPath,
    speed: float,
    noise: NoiseParams,
    dt: float,
    rng_state: NoisyState,
) -> Pose:
    """Ideal step plus seeded x/y perturbation (OU drift + white tremor).

    Draws exactly four normals per tick (drift x, drift y, tremor x, tremor y)
    so the stream layout is stable regardless of which sigmas are zero.
    """
    base = rng_state.clean_pose if rng_state.clean_pose is not None else pose
    clean = step_ideal(base, path, speed, dt)
    rng_state.clean_pose = clean

    sq = math.sqrt(dt)
    shocks = rng_state.rng.standard_normal(4)
    rng_state.drift = rng_state.drift * (1.0 - noise.drift_theta * dt) + noise.drift_sigma * sq * shocks[:2]
    offset = rng_state.drift + noise.tremor_sigma * sq * shocks[2:]
    position = Vec3(clean.position.x + offset[0], clean.position.y + offset[1], clean.position.z)
    return Pose(position, clean.orientation)


def accept_external_pose(sample: ExternalPoseSample) -> Pose:
    """Validate and normalize an externally supplied pose.

    Quaternions within 1e-6 of unit norm are renormalized and accepted;
    anything farther off is rejected.
    """
    q = sample.pose.orientation
    n = math.sqrt(q.w**2 + q.x**2 + q.y**2 + q.z**2)
    if abs(n - 1.0) > _QUAT_ACCEPT_TOL:
        raise ValidationError(f"external pose quaternion norm {n!r} outside 1 +- {_QUAT_ACCEPT_TOL}")
    return Pose(sample.pose.position, UnitQuat.normalized(q.w, q.x, q.y, q.z))


class PoseLatch:
    """Last-writer-wins slot for external poses, safe across threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._pose: Pose | None = None

    def offer(self, sample: ExternalPoseSample) -> Pose:
        pose = accept_external_pose(sample)
        with self._lock:
            self._pose = pose
        return pose

    def latest(self) -> Pose | None:
        with self._lock:
            return self._pose


class InputAccumulator:
    """Collects manual input between ticks: deltas add up, last forward wins."""

    def __init__(self):
        self._lock = threading.Lock()
        self._forward = 0
        self._dyaw = 0.0
        self._dpitch = 0.0

    def feed(self, forward: int | None = None, dyaw: float = 0.0, dpitch: float = 0.0) -> None:
        with self._lock:
            if forward is not None:
                if forward not in (-1, 0, 1):
                    raise ParameterError(f"forward: must be -1, 0 or +1, got {forward!r}")
                self._forward = forward
            self._dyaw += dyaw
            self._dpitch += dpitch

    def drain(self) -> tuple[int, float, float]:
        """Snapshot for one tick: returns (forward, dyaw, dpitch), resets deltas.

        The forward state is sticky: a held key keeps moving until released.
        """
        with self._lock:
            out = (self._forward, self._dyaw, self._dpitch)
            self._dyaw = 0.0
            self._dpitch = 0.0
            return out

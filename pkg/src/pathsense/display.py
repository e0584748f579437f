"""Display backends: tactile voltage matrix and visual gray-level matrix.

The tactile side maps intensity to an off state (0 V) or an active range of
1..10 V, attenuated per electrode by a calibration gain.  The visual side
quantizes intensity to 128 gray levels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO

from .errors import ParseError, ValidationError
from .rendering import Frame

__all__ = [
    "ACTIVATION_THRESHOLD",
    "CalibrationMatrix",
    "VoltageFrame",
    "GrayFrame",
    "to_voltage",
    "to_gray",
    "load_calibration",
]

#: Intensities below this never stimulate, regardless of gain.
ACTIVATION_THRESHOLD = 0.05

_VOLT_MIN = 1.0
_VOLT_MAX = 10.0
_GRAY_LEVELS = 128


@dataclass(frozen=True)
class CalibrationMatrix:
    """Per-cell gains in [0, 1], row-major, row 0 at the top."""

    width: int
    height: int
    gains: tuple[float, ...]

    def __post_init__(self):
        if len(self.gains) != self.width * self.height:
            raise ValidationError(
                f"calibration needs {self.width * self.height} gains, got {len(self.gains)}"
            )
        for i, g in enumerate(self.gains):
            if not (0.0 <= g <= 1.0):
                row, col = divmod(i, self.width)
                raise ValidationError(f"gain {g!r} at cell ({row}, {col}) outside [0, 1]")

    @staticmethod
    def identity(width: int = 12, height: int = 12) -> "CalibrationMatrix":
        return CalibrationMatrix(width, height, (1.0,) * (width * height))


@dataclass(frozen=True)
class VoltageFrame:
    """Electrode voltages: each cell is 0 (off) or within [1, 10] volts."""

    width: int
    height: int
    volts: tuple[float, ...]

    def __post_init__(self):
        if len(self.volts) != self.width * self.height:
            raise ValidationError(
                f"voltage frame needs {self.width * self.height} cells, got {len(self.volts)}"
            )
        for v in self.volts:
            if v != 0.0 and not (_VOLT_MIN <= v <= _VOLT_MAX):
                raise ValidationError(f"voltage {v!r} in the forbidden band (0, 1) or above 10")

    def at(self, col: int, row: int) -> float:
        return self.volts[row * self.width + col]


@dataclass(frozen=True)
class GrayFrame:
    """Visual gray levels, integers in [0, 127]."""

    width: int
    height: int
    levels: tuple[int, ...]

    def __post_init__(self):
        if len(self.levels) != self.width * self.height:
            raise ValidationError(
                f"gray frame needs {self.width * self.height} cells, got {len(self.levels)}"
            )
        for v in self.levels:
            if not isinstance(v, int) or not (0 <= v < _GRAY_LEVELS):
                raise ValidationError(f"gray level {v!r} outside 0..127")

    def at(self, col: int, row: int) -> int:
        return self.levels[row * self.width + col]


def to_voltage(
    frame: Frame,
    calibration: CalibrationMatrix | None = None,
    activation_threshold: float = ACTIVATION_THRESHOLD,
) -> VoltageFrame:
    """Map intensities to electrode voltages.

    The on/off decision happens before gain: intensities under the threshold
    are off.  Active cells get (1 + 9*intensity) * gain volts; if attenuation
    pulls the value under the 1 V stimulation minimum the cell is silenced to
    0 rather than emitting a voltage in the forbidden (0, 1) band.
    """
    if calibration is None:
        calibration = CalibrationMatrix.identity(frame.width, frame.height)
    if (calibration.width, calibration.height) != (frame.width, frame.height):
        raise ValidationError(
            f"calibration is {calibration.width}x{calibration.height}, "
            f"frame is {frame.width}x{frame.height}"
        )
    volts = []
    for intensity, gain in zip(frame.intensities, calibration.gains):
        if intensity < activation_threshold:
            volts.append(0.0)
            continue
        v = (1.0 + 9.0 * intensity) * gain
        volts.append(0.0 if v < _VOLT_MIN else min(v, _VOLT_MAX))
    return VoltageFrame(frame.width, frame.height, tuple(volts))


def to_gray(frame: Frame) -> GrayFrame:
    """Quantize intensities to 128 gray levels with round-half-up."""
    levels = tuple(int(math.floor(v * (_GRAY_LEVELS - 1) + 0.5)) for v in frame.intensities)
    return GrayFrame(frame.width, frame.height, levels)


def load_calibration(source: IO | bytes | str, width: int = 12, height: int = 12) -> CalibrationMatrix:
    """Parse a calibration file: a JSON array of width*height gains in [0, 1]."""
    data = source.read() if hasattr(source, "read") else source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        values = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"calibration file is not valid JSON: {e}") from e
    if not isinstance(values, list):
        raise ParseError("calibration file must be a JSON array of gains")
    expected = width * height
    if len(values) != expected:
        raise ParseError(f"expected {expected} gains, got {len(values)}")
    gains = []
    for i, raw in enumerate(values):
        row, col = divmod(i, width)
        if not isinstance(raw, (int, float)) or isinstance(raw, bool):
            raise ParseError(f"gain at cell ({row}, {col}) is not a number")
        g = float(raw)
        if not (0.0 <= g <= 1.0):
            raise ParseError(f"gain {g} at cell ({row}, {col}) outside [0, 1]")
        gains.append(g)
    return CalibrationMatrix(width, height, tuple(gains))

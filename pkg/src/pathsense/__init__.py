"""Deterministic simulator for low-resolution subjective-view displays.

A virtual camera travels along a path of light points inside a 12 cm cube,
renders what it sees onto a 12 x 12 intensity grid, and maps that grid to a
tactile (voltage) or visual (gray) display.  Sessions run on a fixed 5 ms
logical clock under manual, external, ideal, or noisy control; trajectory
records feed z-binned deviation, correlation, and transit-time metrics.
"""

from .control import (
    ControlCommand,
    InputAccumulator,
    ManualParams,
    NoiseParams,
    PoseLatch,
    step_ideal,
    step_manual,
    step_noisy,
)
from .display import (
    CalibrationMatrix,
    GrayFrame,
    VoltageFrame,
    load_calibration,
    to_gray,
    to_voltage,
)
from .errors import (
    MetricUndefinedError,
    ParameterError,
    ParseError,
    PathSenseError,
    ProtocolError,
    StateError,
    ValidationError,
)
from .geometry import (
    CUBE_HALF_WIDTH,
    CUBE_HEIGHT,
    LightPath,
    PathParams,
    Polyline,
    Pose,
    UnitQuat,
    Vec3,
    builtin_path,
    distance_to_target,
    load_path,
    make_path,
    polyline_of,
    save_path,
    view_axis,
)
from .metrics import (
    ConditionRow,
    MetricsReport,
    ZBinnedSeries,
    aggregate,
    avg_sd,
    condition_row,
    correlation_along_z,
    render_csv,
    transit_time,
    trial_metrics,
    write_csv,
    zbin,
    zbin_reference,
)
from .rendering import CameraModel, CutoffParams, Frame, render_frame
from .runner import (
    RunResult,
    RunSpec,
    default_data_dir,
    replay_frames,
    resolve_path,
    run_headless,
)
from .server import create_app
from .session import (
    Session,
    SessionConfig,
    SessionEvent,
    TrajectoryRecord,
    TrajectorySample,
    export_record,
    parse_record,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # geometry
    "Vec3", "UnitQuat", "Pose", "LightPath", "PathParams", "Polyline",
    "CUBE_HEIGHT", "CUBE_HALF_WIDTH",
    "make_path", "builtin_path", "load_path", "save_path", "polyline_of",
    "distance_to_target", "view_axis",
    # rendering and display mapping
    "CameraModel", "CutoffParams", "Frame", "render_frame",
    "CalibrationMatrix", "VoltageFrame", "GrayFrame",
    "to_voltage", "to_gray", "load_calibration",
    # control
    "ControlCommand", "ManualParams", "NoiseParams",
    "InputAccumulator", "PoseLatch",
    "step_manual", "step_ideal", "step_noisy",
    # session
    "Session", "SessionConfig", "SessionEvent",
    "TrajectorySample", "TrajectoryRecord",
    "export_record", "parse_record",
    # metrics
    "ZBinnedSeries", "MetricsReport", "ConditionRow",
    "zbin", "zbin_reference", "correlation_along_z", "avg_sd", "transit_time",
    "aggregate", "trial_metrics", "condition_row", "write_csv", "render_csv",
    # service
    "RunSpec", "RunResult", "run_headless", "replay_frames", "resolve_path",
    "default_data_dir", "create_app",
    # errors
    "PathSenseError", "ParameterError", "ValidationError", "StateError",
    "MetricUndefinedError", "ParseError", "ProtocolError",
]

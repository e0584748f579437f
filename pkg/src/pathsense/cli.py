"""Command line entry points: gen-path, run, serve, replay, metrics."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .errors import PathSenseError, ValidationError
from .geometry import PathParams, make_path, save_path
from .metrics import condition_row, render_csv
from .runner import (
    DATA_DIR_ENV,
    RunSpec,
    default_data_dir,
    replay_frames,
    resolve_path,
    run_headless,
)
from .session import SessionConfig, parse_record
from .control import NoiseParams

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathsense",
        description="Low-resolution subjective-view path following: simulator, service, metrics.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    gen = sub.add_parser("gen-path", help="generate a light path JSON file")
    gen.add_argument("--kind", choices=("curved", "helical"), default="curved")
    gen.add_argument("--height", type=float, default=12.0)
    gen.add_argument("--extent", type=float, default=6.0)
    gen.add_argument("--turns", type=float, default=1.5)
    gen.add_argument("--points", type=int, default=40)
    gen.add_argument("--id", dest="path_id", default=None)
    gen.add_argument("--out", type=Path, default=None, help="default: stdout")
    gen.set_defaults(func=cmd_gen_path)

    run = sub.add_parser("run", help="run scripted headless trials and report metrics")
    run.add_argument("--path", required=True, help="path1, path2 or a path JSON file")
    run.add_argument("--controller", choices=("ideal", "noisy"), default="ideal")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--seed", type=int, default=None, help="seed base; required for noisy runs")
    run.add_argument("--speed", type=float, default=2.0)
    run.add_argument("--timeout", type=float, default=300.0)
    run.add_argument("--target-radius", type=float, default=0.5)
    run.add_argument("--tremor-sigma", type=float, default=0.15)
    run.add_argument("--drift-theta", type=float, default=0.5)
    run.add_argument("--drift-sigma", type=float, default=0.3)
    run.add_argument("--bin-width", type=float, default=0.1)
    run.add_argument("--display", choices=("vdu", "tdu"), default="vdu")
    run.add_argument("--condition", default=None)
    run.add_argument("--out-dir", type=Path, default=None,
                     help=f"default: ${DATA_DIR_ENV} or {default_data_dir()}")
    run.set_defaults(func=cmd_run)

    serve = sub.add_parser("serve", help="serve live sessions over a WebSocket")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--data-dir", type=Path, default=None)
    serve.set_defaults(func=cmd_serve)

    replay = sub.add_parser("replay", help="re-render a recorded run as frame JSON lines")
    replay.add_argument("file", type=Path)
    replay.add_argument("--path", default=None,
                        help="path source if the record's path_id is not built in")
    replay.add_argument("--fps", type=float, default=25.0)
    replay.set_defaults(func=cmd_replay)

    metrics = sub.add_parser("metrics", help="aggregate trajectory files into a CSV row")
    metrics.add_argument("files", nargs="+", type=Path)
    metrics.add_argument("--path", required=True, help="path1, path2 or a path JSON file")
    metrics.add_argument("--condition", default=None)
    metrics.add_argument("--bin-width", type=float, default=0.1)
    metrics.add_argument("--mode", choices=("path", "trial_mean"), default="path")
    metrics.add_argument("--out", type=Path, default=None, help="default: stdout")
    metrics.set_defaults(func=cmd_metrics)

    return parser


def cmd_gen_path(args) -> int:
    params = PathParams(
        kind=args.kind, height=args.height, lateral_extent=args.extent,
        turns=args.turns, n_points=args.points,
    )
    path = make_path(params, id=args.path_id)
    if args.out is None:
        save_path(path, sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            save_path(path, fh)
        print(f"wrote {args.out} ({len(path.points)} points)")
    return 0


def cmd_run(args) -> int:
    if args.controller == "noisy" and args.seed is None:
        print("error: --seed is required for noisy runs", file=sys.stderr)
        return 2
    path = resolve_path(args.path)
    config = SessionConfig(
        path=path,
        display=args.display,
        controller=args.controller,
        target_radius=args.target_radius,
        timeout_s=args.timeout,
        speed=args.speed,
        noise=NoiseParams(
            tremor_sigma=args.tremor_sigma,
            drift_theta=args.drift_theta,
            drift_sigma=args.drift_sigma,
            seed=args.seed or 0,
        ),
        render_frames=False,
    )
    spec = RunSpec(
        config=config, trials=args.trials, seed_base=args.seed or 0,
        out_dir=args.out_dir, condition=args.condition, bin_width=args.bin_width,
    )
    result = run_headless(spec)
    row = result.row
    print(f"{row.n_trials} trials on {row.path_id}: "
          f"avg_sd {row.avg_sd_cm:.4f} cm, corr {row.correlation_pct:.2f}%, "
          f"transit {row.transit_mean_s:.2f} ± {row.transit_sd_s:.2f} s")
    print(f"report: {result.csv_file}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay(args) -> int:
    if not (args.fps > 0):
        print(f"error: --fps must be > 0, got {args.fps}", file=sys.stderr)
        return 2
    with open(args.file, encoding="utf-8") as fh:
        record = parse_record(fh)
    path = resolve_path(args.path if args.path is not None else record.path_id)
    delay = 1.0 / args.fps
    for sample, frame in zip(record.samples, replay_frames(record, path)):
        print(json.dumps({"t_ms": sample.t_ms, "grid": list(frame.intensities)},
                         separators=(",", ":")))
        time.sleep(delay)
    return 0


def cmd_metrics(args) -> int:
    path = resolve_path(args.path)
    records = []
    for file in args.files:
        with open(file, encoding="utf-8") as fh:
            record = parse_record(fh)
        if record.path_id != path.id:
            raise ValidationError(
                f"{file}: record was made on path {record.path_id!r}, not {path.id!r}"
            )
        records.append(record)
    row = condition_row(
        args.condition or f"{records[0].display}-{records[0].controller}",
        records, path, args.bin_width, args.mode,
    )
    text = render_csv([row])
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # Downstream closed the pipe (e.g. piped into head); not an error.
        # Detach stdout so interpreter shutdown does not try to flush it.
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except PathSenseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

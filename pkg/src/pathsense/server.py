"""Real-time session service: newline-delimited JSON messages over a WebSocket.

One session per connection.  The logical clock always advances 5 ms per
tick; wall-clock pacing only schedules when ticks happen.  Modes:

- paced (default): ticks at 5 ms nominal wall intervals; decimated frames
  go through a latest-frame slot so a slow reader drops frames instead of
  stalling the tick loop.
- pace=false: ticks run back to back and every decimated frame is sent,
  which makes full transcripts reproducible byte for byte.
- lockstep=true (external controller only): exactly one tick per received
  pose message, for deterministic replay of recorded runs.

Terminal order is fixed: final frame, then the terminal event, then one
metrics message.  No frame ever follows the terminal event.
"""

from __future__ import annotations

import asyncio
import itertools
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .control import ExternalPoseSample, ManualParams, NoiseParams
from .errors import PathSenseError, ProtocolError
from .geometry import LightPath, builtin_path
from .metrics import avg_sd, correlation_along_z, transit_time, zbin, zbin_reference
from .protocol import (
    AbortMessage,
    ErrorMessage,
    EventMessage,
    FrameMessage,
    InputMessage,
    MetricsMessage,
    PoseMessage,
    StartMessage,
    parse_message,
    serialize_message,
)
from .rendering import Frame
from .runner import default_data_dir
from .session import PHASE_RUNNING, Session, SessionConfig, export_record

__all__ = ["create_app", "app"]


def _session_config(msg: StartMessage, path: LightPath) -> SessionConfig:
    return SessionConfig(
        path=path,
        display=msg.display,
        controller=msg.controller,
        target_radius=msg.target_radius,
        timeout_s=msg.timeout_s,
        speed=msg.speed,
        manual=ManualParams(linear_speed=msg.speed, mouse_sensitivity=msg.mouse_sensitivity),
        noise=NoiseParams(
            tremor_sigma=msg.tremor_sigma,
            drift_theta=msg.drift_theta,
            drift_sigma=msg.drift_sigma,
            seed=msg.seed if msg.seed is not None else 0,
        ),
        render_frames=True,
    )


class _Connection:
    def __init__(self, ws: WebSocket, data_dir: Path, file_seq):
        self.ws = ws
        self.data_dir = data_dir
        self.file_seq = file_seq
        self.session: Session | None = None
        self.start_msg: StartMessage | None = None
        self.tick_task: asyncio.Task | None = None
        self.sender_task: asyncio.Task | None = None
        self.send_lock = asyncio.Lock()
        self.frame_slot: FrameMessage | None = None
        self.frame_ready = asyncio.Event()
        self.finished = False
        self.persisted = False

    # -- plumbing ------------------------------------------------------

    async def send(self, msg) -> None:
        async with self.send_lock:
            await self.ws.send_text(serialize_message(msg))

    async def error(self, text: str) -> None:
        await self.send(ErrorMessage(message=text))

    def _frame_msg(self, frame: Frame, t_ms: int) -> FrameMessage:
        return FrameMessage(t_ms=t_ms, grid=frame.intensities)

    async def _frame_sender(self) -> None:
        """Drains the latest-frame slot; older undelivered frames are dropped."""
        while True:
            await self.frame_ready.wait()
            self.frame_ready.clear()
            msg, self.frame_slot = self.frame_slot, None
            if msg is not None:
                await self.send(msg)

    async def emit_frame(self, msg: FrameMessage) -> None:
        if self.start_msg.pace and not self.start_msg.lockstep:
            self.frame_slot = msg
            self.frame_ready.set()
        else:
            await self.send(msg)

    # -- lifecycle ----------------------------------------------------

    async def on_start(self, msg: StartMessage) -> None:
        if self.session is not None and self.session.phase == PHASE_RUNNING:
            await self.error("a session is already running")
            return
        try:
            if msg.path_id is not None:
                path = builtin_path(msg.path_id)
            else:
                path = msg.inline_path()
            if msg.lockstep and msg.controller != "external":
                raise ProtocolError("lockstep needs controller external")
            if msg.controller == "noisy" and msg.seed is None:
                raise ProtocolError("noisy runs need an explicit seed")
            config = _session_config(msg, path)
            session = Session(config)
            session.start()
        except PathSenseError as e:
            await self.error(str(e))
            return

        self.session = session
        self.start_msg = msg
        self.finished = False
        self.persisted = False
        await self.send(EventMessage(kind="started", t_ms=0))
        await self.emit_frame(self._frame_msg(session.render_now(), 0))
        if not msg.lockstep:
            if msg.pace and self.sender_task is None:
                self.sender_task = asyncio.create_task(self._frame_sender())
            self.tick_task = asyncio.create_task(self._tick_loop())

    async def _tick_loop(self) -> None:
        session = self.session
        msg = self.start_msg
        interval = session.config.tick_ms / 1000.0
        loop = asyncio.get_running_loop()
        deadline = loop.time() + interval
        try:
            while session.phase == PHASE_RUNNING:
                if msg.pace:
                    delay = deadline - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    deadline += interval
                else:
                    await asyncio.sleep(0)
                await self._advance_one_tick()
        except asyncio.CancelledError:
            raise
        except (WebSocketDisconnect, RuntimeError):
            pass  # connection went away mid-send; shutdown handles the record

    async def _advance_one_tick(self) -> None:
        session = self.session
        result = session.tick()
        if result.events:
            await self._finish(result.frame, result.events[0])
            return
        decim_ms = session.config.tick_ms * self.start_msg.decimation
        if result.frame is not None and session.clock_ms % decim_ms == 0:
            await self.emit_frame(self._frame_msg(result.frame, session.clock_ms))

    async def _finish(self, frame: Frame | None, event) -> None:
        self.frame_slot = None  # never a frame after the terminal event
        if frame is not None:
            await self.send(self._frame_msg(frame, event.t_ms))
        await self.send(EventMessage(kind=event.kind, t_ms=event.t_ms))
        await self.send(self._metrics_message())
        self.finished = True
        self._persist()

    def _metrics_message(self) -> MetricsMessage:
        record = self.session.record()
        path = self.session.config.path
        avg = corr = transit = None
        try:
            transit = transit_time(record)
        except PathSenseError:
            pass
        try:
            binned = zbin(record, path)
            reference = zbin_reference(path)
            try:
                avg = avg_sd(binned, reference)
            except PathSenseError:
                pass
            try:
                corr = correlation_along_z(binned, reference)
            except PathSenseError:
                pass
        except PathSenseError:
            pass
        return MetricsMessage(avg_sd_cm=avg, correlation_pct=corr, transit_time_s=transit)

    def _persist(self) -> None:
        if self.persisted or self.session is None:
            return
        record = self.session.record()
        self.data_dir.mkdir(parents=True, exist_ok=True)
        name = f"session-{record.path_id}-{record.controller}-{next(self.file_seq):04d}.jsonl"
        (self.data_dir / name).write_text(export_record(record), encoding="utf-8")
        self.persisted = True

    # -- message dispatch ----------------------------------------------

    async def handle(self, text: str) -> None:
        try:
            msg = parse_message(text)
        except ProtocolError as e:
            await self.error(str(e))
            return
        if isinstance(msg, StartMessage):
            await self.on_start(msg)
        elif isinstance(msg, InputMessage):
            await self.on_input(msg)
        elif isinstance(msg, PoseMessage):
            await self.on_pose(msg)
        elif isinstance(msg, AbortMessage):
            await self.on_abort()
        else:
            await self.error(f"server does not accept {type(msg).__name__}")

    def _running(self) -> bool:
        return self.session is not None and self.session.phase == PHASE_RUNNING

    async def on_input(self, msg: InputMessage) -> None:
        if not self._running():
            # In-flight input racing the terminal event is dropped quietly;
            # input with no session at all is a client bug worth reporting.
            if self.session is None:
                await self.error("no session: send start first")
            return
        if self.session.config.controller != "manual":
            await self.error("this session's controller does not take input messages")
            return
        self.session.inputs.feed(forward=msg.forward, dyaw=msg.dyaw, dpitch=msg.dpitch)

    async def on_pose(self, msg: PoseMessage) -> None:
        if not self._running():
            if self.session is None:
                await self.error("no session: send start first")
            return
        if self.session.config.controller != "external":
            await self.error("this session's controller does not take pose messages")
            return
        try:
            pose = msg.to_pose()
        except ProtocolError as e:
            await self.error(str(e))
            return
        self.session.pose_latch.offer(ExternalPoseSample(pose))
        if self.start_msg.lockstep:
            await self._advance_one_tick()

    async def on_abort(self) -> None:
        if not self._running():
            await self.error("no running session to abort")
            return
        if self.tick_task is not None:
            self.tick_task.cancel()
        event = self.session.abort()
        await self._finish(None, event)

    # -- connection loop ---------------------------------------------------

    async def run(self) -> None:
        try:
            while True:
                text = await self.ws.receive_text()
                await self.handle(text)
        except WebSocketDisconnect:
            pass
        finally:
            await self.shutdown()

    async def shutdown(self) -> None:
        for task in (self.tick_task, self.sender_task):
            if task is not None:
                task.cancel()
                try:
                    await task
                except (asyncio.CancelledError, WebSocketDisconnect, RuntimeError):
                    pass
        if self._running():
            self.session.abort()
        if self.session is not None and self.session.phase != PHASE_RUNNING:
            try:
                self._persist()
            except OSError:
                pass


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    application = FastAPI(title="pathsense session service")
    resolved = Path(data_dir) if data_dir is not None else default_data_dir()
    file_seq = itertools.count()

    @application.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await _Connection(ws, resolved, file_seq).run()

    @application.get("/health")
    async def health():
        return {"status": "ok"}

    return application


app = create_app()

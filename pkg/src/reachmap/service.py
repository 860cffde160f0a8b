"""Live websocket bridge: one operator drives the session, observers watch.

The session engine is sample-clocked, so trial outcomes depend only on the
input stream the operator sends, never on server timing; a scripted client
replaying a recorded stream reproduces a headless run exactly. Message
schemas are documented in PROTOCOL.md.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .config import Config
from .engine import SessionEngine
from .profile import ControlSample, build_profile
from .remap import compile_stack
from .store import ArchiveWriter

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
OBSERVER_QUEUE = 256


def _error(code: str, message: str) -> dict:
    return {"v": PROTOCOL_VERSION, "type": "error", "code": code, "message": message}


class TaskServer:
    """Session state machine behind the socket endpoint.

    Single writer: every engine interaction happens on the event loop, in
    message-arrival order. Map compilation runs off-loop on a snapshot of the
    calibration stream and is adopted back on the loop.
    """

    def __init__(
        self,
        config: Config | None = None,
        seed: int = 0,
        archive_root: str | Path | None = None,
        auto_advance: bool = False,
        hold_at_breaks: bool | None = None,
    ):
        if hold_at_breaks is None:
            hold_at_breaks = not auto_advance  # nobody can resume an auto session
        self.config = config or Config()
        self.writer = (
            ArchiveWriter(
                archive_root, self.config, seed, auto_advance=auto_advance,
                hold_at_breaks=hold_at_breaks,
            )
            if archive_root
            else None
        )
        self.engine = SessionEngine(
            self.config,
            seed=seed,
            auto_advance=auto_advance,
            recorder=self.writer,
            hold_at_breaks=hold_at_breaks,
        )
        self.operator = None
        self.observers: dict[object, asyncio.Queue] = {}
        self._compile_task: asyncio.Task | None = None
        self._server = None
        self.port: int | None = None

    # -- connection handling -------------------------------------------------

    async def handler(self, ws) -> None:
        role = None
        try:
            async for text in ws:
                try:
                    msg = json.loads(text)
                except json.JSONDecodeError:
                    await ws.send(json.dumps(_error("bad-json", "unparseable frame")))
                    continue
                if not isinstance(msg, dict) or "type" not in msg:
                    await ws.send(json.dumps(_error("bad-message", "missing type")))
                    continue
                if msg.get("v") != PROTOCOL_VERSION:
                    await ws.send(
                        json.dumps(_error("bad-version", f"expected v={PROTOCOL_VERSION}"))
                    )
                    continue
                if role is None:
                    if msg["type"] != "hello":
                        await ws.send(json.dumps(_error("no-hello", "say hello first")))
                        continue
                    role = await self._hello(ws, msg)
                    continue
                if role == "operator":
                    await self._operator_message(ws, msg)
                else:
                    await ws.send(json.dumps(_error("read-only", "observers cannot send")))
        except ConnectionClosed:
            pass
        finally:
            if role == "operator" and self.operator is ws:
                self.operator = None
                log.info("operator disconnected; session persists")
            self.observers.pop(ws, None)

    async def _hello(self, ws, msg: dict) -> str | None:
        role = msg.get("role", "observer")
        if role == "operator":
            if self.operator is not None:
                await ws.send(json.dumps(_error("operator-taken", "operator slot in use")))
                return None
            self.operator = ws
        else:
            role = "observer"
            queue: asyncio.Queue = asyncio.Queue(maxsize=OBSERVER_QUEUE)
            self.observers[ws] = queue
            asyncio.create_task(self._observer_writer(ws, queue))
        welcome = {
            "v": PROTOCOL_VERSION,
            "type": "welcome",
            "role": role,
            "snapshot": self.engine.snapshot().to_message(0.0),
            "plan": [
                {"name": p.name, "condition": p.condition, "targets": len(p.target_ids)}
                for p in self.engine.plan
            ],
        }
        if self.engine.profile is not None:
            # reachable-set outlines, drawn by observer views only
            welcome["hulls"] = [
                {"bin": b.index, "vertices": [[v.x, v.y] for v in b.hull.vertices]}
                for b in self.engine.profile.bins
            ]
        await ws.send(json.dumps(welcome))
        return role

    async def _observer_writer(self, ws, queue: asyncio.Queue) -> None:
        try:
            while True:
                await ws.send(await queue.get())
        except ConnectionClosed:
            self.observers.pop(ws, None)

    # -- message handling ----------------------------------------------------

    async def _operator_message(self, ws, msg: dict) -> None:
        mtype = msg["type"]
        if mtype == "input":
            try:
                sample = ControlSample(
                    float(msg["t"]), float(msg["x"]), float(msg["y"]), float(msg["z"])
                )
            except (KeyError, TypeError, ValueError):
                await ws.send(json.dumps(_error("bad-input", "input needs numeric t,x,y,z")))
                return
            events = self.engine.step(sample)
            await self._broadcast(ws, events)
        elif mtype == "control":
            await self._control(ws, msg)
        else:
            await ws.send(json.dumps(_error("bad-type", f"unknown type {mtype!r}")))

    async def _control(self, ws, msg: dict) -> None:
        action = msg.get("action")
        record = {"type": "control", "action": action}
        if "condition" in msg:
            record["condition"] = msg["condition"]
        try:
            if action == "start-phase":
                if self.engine.phase != "idle":
                    raise RuntimeError(f"cannot start a phase during {self.engine.phase!r}")
                self._record_control(record)
                nxt = self.engine.next_round()
                if (
                    nxt is not None
                    and nxt.condition in ("remap", "smoothed")
                    and self.engine.stack is None
                ):
                    await self._compile_then_advance(ws)
                else:
                    await self._broadcast(ws, self.engine.advance())
            elif action == "break":
                self._record_control(record)
                if not self.engine.request_break():
                    raise RuntimeError("break not available now")
                await self._broadcast(ws, [self.engine.snapshot().to_message(0.0)])
            elif action == "resume":
                self._record_control(record)
                if not self.engine.resume():
                    raise RuntimeError("nothing to resume")
                await self._broadcast(ws, [self.engine.snapshot().to_message(0.0)])
            elif action == "set-condition":
                condition = msg.get("condition")
                if self.engine.phase != "idle":
                    raise RuntimeError(f"cannot switch conditions during {self.engine.phase!r}")
                self._record_control(record)
                await self._broadcast(ws, self.engine.start_adhoc_round(condition))
            else:
                await ws.send(json.dumps(_error("bad-action", f"unknown action {action!r}")))
        except (RuntimeError, ValueError, KeyError) as err:
            await ws.send(json.dumps(_error("out-of-phase", str(err))))

    def _record_control(self, record: dict) -> None:
        if self.writer is not None:
            self.writer.record_event(record)

    async def _compile_then_advance(self, ws) -> None:
        if self._compile_task is not None and not self._compile_task.done():
            await ws.send(json.dumps(_error("compiling", "map compile already running")))
            return
        self.engine.compile_state = "running"
        await self._broadcast(
            ws, [{"v": 1, "type": "compile-status", "state": "running"}]
        )
        calibration = list(self.engine.calibration)
        config = self.config

        def build():
            profile = build_profile(calibration, config)
            return profile, compile_stack(profile, config)

        async def run():
            try:
                profile, stack = await asyncio.to_thread(build)
            except Exception as err:  # surfaced to the operator, session stays up
                self.engine.compile_state = "failed"
                await self._broadcast(
                    ws,
                    [{"v": 1, "type": "compile-status", "state": "failed", "message": str(err)}],
                )
                return
            events = self.engine.adopt_maps(profile, stack)
            if self.writer is not None:
                self.writer.save_profile(profile)
                self.writer.save_stack(stack)
            events.extend(self.engine.advance())
            await self._broadcast(ws, events)

        self._compile_task = asyncio.create_task(run())

    async def _broadcast(self, operator_ws, events: list[dict]) -> None:
        if not events:
            return
        payloads = [json.dumps(e) for e in events]
        if operator_ws is not None:
            try:
                for p in payloads:
                    await operator_ws.send(p)
            except ConnectionClosed:
                pass
        for queue in list(self.observers.values()):
            for p in payloads:
                if queue.full():  # drop-oldest: observers lag, never block
                    try:
                        queue.get_nowait()
                    except asyncio.QueueEmpty:
                        pass
                queue.put_nowait(p)

    # -- lifecycle -------------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", port: int = 0):
        self._server = await ws_serve(self.handler, host, port)
        self.port = self._server.sockets[0].getsockname()[1]
        log.info("serving on ws://%s:%d", host, self.port)
        return self

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        if self.writer is not None:
            if self.engine.profile is not None:
                self.writer.save_profile(self.engine.profile)
            if self.engine.stack is not None:
                self.writer.save_stack(self.engine.stack)
            self.writer.close()

    async def serve_forever(self, host: str, port: int) -> None:
        await self.start(host, port)
        try:
            await asyncio.get_running_loop().create_future()
        finally:
            await self.stop()


def serve(
    config: Config | None = None,
    seed: int = 0,
    host: str = "127.0.0.1",
    port: int = 8765,
    archive_root: str | Path | None = None,
    auto_advance: bool = False,
) -> None:
    """Blocking entrypoint used by the CLI."""
    server = TaskServer(config, seed=seed, archive_root=archive_root, auto_advance=auto_advance)
    try:
        asyncio.run(server.serve_forever(host, port))
    except KeyboardInterrupt:
        pass

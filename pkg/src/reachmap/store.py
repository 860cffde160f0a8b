"""Session persistence and replay.

An archive is a directory of newline-delimited JSON streams plus binary map
grids. raw.ndjson is the event source (input samples and operator controls);
deployed.ndjson and trials.ndjson are derived streams, reproducible bit for
bit by replaying raw.ndjson through the recorded config.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .config import Config
from .engine import SessionEngine
from .profile import BiasProfile, ControlSample
from .remap import RemapStack, VersionMismatch, compile_stack, load_stack, save_stack
from .task import TrialRecord

log = logging.getLogger(__name__)

ARCHIVE_VERSION = 1
RAW = "raw.ndjson"
DEPLOYED = "deployed.ndjson"
TRIALS = "trials.ndjson"
MANIFEST = "manifest.json"
PROFILE = "profile.json"
STACK = "stack.bin"


class MissingStack(RuntimeError):
    """Replay under a remap condition needs a stack or a profile to build one."""


def _dumps(event: dict) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


class _Stream:
    """Append-only NDJSON stream with a running content hash."""

    def __init__(self, path: Path):
        self.path = path
        self.fh = open(path, "a", encoding="utf-8")
        self.hasher = hashlib.sha256()
        self.lines = 0

    def write(self, event: dict) -> None:
        line = _dumps(event) + "\n"
        self.fh.write(line)
        self.hasher.update(line.encode())
        self.lines += 1

    def flush(self) -> None:
        self.fh.flush()

    def close(self) -> None:
        self.fh.close()


class ArchiveWriter:
    """Single-writer session recorder; flushes durable state at trial ends."""

    def __init__(
        self,
        root: str | Path,
        config: Config,
        seed: int,
        auto_advance: bool = True,
        hold_at_breaks: bool = False,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.seed = seed
        self.auto_advance = auto_advance
        self.hold_at_breaks = hold_at_breaks
        self._streams = {
            RAW: _Stream(self.root / RAW),
            DEPLOYED: _Stream(self.root / DEPLOYED),
            TRIALS: _Stream(self.root / TRIALS),
        }
        self.phases: list[dict] = []
        self._closed = False
        self._write_manifest(closed=False)

    def record_event(self, event: dict) -> None:
        etype = event.get("type", "")
        if etype == "deployed":
            self._streams[DEPLOYED].write(event)
        elif etype == "trial-end":
            self._streams[TRIALS].write(event)
            self.flush()
        elif etype == "event:phase":
            self.phases.append({"phase": event.get("phase"), "line": self._streams[RAW].lines})
            self._streams[RAW].write(event)
        else:  # sample, control, remaining markers
            self._streams[RAW].write(event)

    def save_profile(self, profile: BiasProfile) -> None:
        (self.root / PROFILE).write_text(profile.to_json())

    def save_stack(self, stack: RemapStack) -> None:
        save_stack(stack, self.root / STACK)

    def flush(self) -> None:
        for stream in self._streams.values():
            stream.flush()
        self._write_manifest(closed=False)

    def close(self) -> None:
        if self._closed:
            return
        for stream in self._streams.values():
            stream.flush()
        self._write_manifest(closed=True)
        for stream in self._streams.values():
            stream.close()
        self._closed = True

    def __enter__(self) -> "ArchiveWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _write_manifest(self, closed: bool) -> None:
        manifest = {
            "version": ARCHIVE_VERSION,
            "seed": self.seed,
            "auto_advance": self.auto_advance,
            "hold_at_breaks": self.hold_at_breaks,
            "config": self.config.to_dict(),
            "closed": closed,
            "phases": self.phases,
            "files": {
                name: {"sha256": s.hasher.hexdigest(), "lines": s.lines}
                for name, s in self._streams.items()
            },
        }
        (self.root / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True))


@dataclass
class SessionArchive:
    """Loaded view of an archive directory."""

    root: Path
    manifest: dict
    truncated: bool = False
    _events: dict[str, list[dict]] = field(default_factory=dict, repr=False)

    @classmethod
    def load(cls, root: str | Path) -> "SessionArchive":
        root = Path(root)
        manifest_path = root / MANIFEST
        if not manifest_path.exists():
            raise FileNotFoundError(f"{manifest_path} missing; not an archive")
        manifest = json.loads(manifest_path.read_text())
        version = manifest.get("version")
        if version != ARCHIVE_VERSION:
            raise VersionMismatch(f"archive version {version!r}, expected {ARCHIVE_VERSION}")
        archive = cls(root=root, manifest=manifest)
        archive._verify()
        return archive

    def _verify(self) -> None:
        for name, meta in self.manifest.get("files", {}).items():
            path = self.root / name
            if not path.exists():
                log.warning("archive %s: %s missing", self.root, name)
                self.truncated = True
                continue
            lines = path.read_text().splitlines(keepends=True)
            recorded = meta.get("lines", 0)
            if len(lines) < recorded:
                log.warning(
                    "archive %s: %s truncated (%d of %d lines)",
                    self.root, name, len(lines), recorded,
                )
                self.truncated = True
                continue
            hasher = hashlib.sha256()
            for line in lines[:recorded]:
                hasher.update(line.encode())
            if hasher.hexdigest() != meta.get("sha256"):
                log.warning("archive %s: %s content does not match manifest", self.root, name)
                self.truncated = True
            if len(lines) > recorded and not self.manifest.get("closed", False):
                log.warning(
                    "archive %s: %s has %d unflushed tail lines",
                    self.root, name, len(lines) - recorded,
                )

    @property
    def config(self) -> Config:
        return Config.from_dict(self.manifest["config"])

    @property
    def seed(self) -> int:
        return self.manifest["seed"]

    def events(self, name: str = RAW) -> list[dict]:
        if name not in self._events:
            rows = []
            path = self.root / name
            if path.exists():
                for i, line in enumerate(path.read_text().splitlines()):
                    try:
                        rows.append(json.loads(line))
                    except json.JSONDecodeError:
                        log.warning("archive %s: %s line %d unparseable; dropped", self.root, name, i)
                        self.truncated = True
            self._events[name] = rows
        return self._events[name]

    def deployed_bytes(self) -> bytes:
        path = self.root / DEPLOYED
        return path.read_bytes() if path.exists() else b""

    def trial_summaries(self) -> list[TrialRecord]:
        return [TrialRecord.from_summary(row) for row in self.events(TRIALS)]

    def load_profile(self) -> BiasProfile | None:
        path = self.root / PROFILE
        return BiasProfile.from_json(path.read_text()) if path.exists() else None

    def load_stack(self) -> RemapStack | None:
        path = self.root / STACK
        return load_stack(path) if path.exists() else None


class _CollectingRecorder:
    """In-memory recorder matching ArchiveWriter's byte formatting."""

    def __init__(self):
        self.lines: dict[str, list[str]] = {RAW: [], DEPLOYED: [], TRIALS: []}
        self.profile = None
        self.stack = None

    def record_event(self, event: dict) -> None:
        etype = event.get("type", "")
        if etype == "deployed":
            self.lines[DEPLOYED].append(_dumps(event) + "\n")
        elif etype == "trial-end":
            self.lines[TRIALS].append(_dumps(event) + "\n")
        else:
            self.lines[RAW].append(_dumps(event) + "\n")

    def save_profile(self, profile) -> None:
        self.profile = profile

    def save_stack(self, stack) -> None:
        self.stack = stack


@dataclass
class ReplayResult:
    records: dict[str, list[TrialRecord]]
    deployed_bytes: bytes
    raw_bytes: bytes
    engine: SessionEngine

    def matches_recorded(self, archive: SessionArchive) -> bool:
        return self.deployed_bytes == archive.deployed_bytes()


def replay(
    archive: SessionArchive | str | Path, condition_override: str | None = None
) -> ReplayResult:
    """Re-run an archive's event source through a fresh engine.

    Without an override this reproduces the recorded deployed stream
    bit-exactly. With one, every round re-runs under the given condition
    using the archived stack (or a stack compiled from the archived profile),
    answering what a different deployment would have produced.
    """
    if not isinstance(archive, SessionArchive):
        archive = SessionArchive.load(archive)
    config = archive.config
    recorder = _CollectingRecorder()
    engine = SessionEngine(
        config,
        seed=archive.seed,
        auto_advance=archive.manifest.get("auto_advance", True),
        recorder=recorder,
        hold_at_breaks=archive.manifest.get("hold_at_breaks", False),
    )
    if condition_override is not None:
        if condition_override not in ("raw", "remap", "smoothed"):
            raise ValueError(f"unknown condition {condition_override!r}")
        if condition_override != "raw":
            stack = archive.load_stack()
            if stack is None:
                profile = archive.load_profile()
                if profile is None:
                    raise MissingStack(
                        f"{archive.root}: no stack.bin or profile.json for condition "
                        f"{condition_override!r}"
                    )
                stack = compile_stack(profile, config)
            engine.stack = stack
            engine.profile = archive.load_profile()
            engine.compile_state = "done"
        engine.plan = [
            type(p)(p.name, condition_override, p.target_ids) for p in engine.plan
        ]
        engine.records = {p.name: [] for p in engine.plan}

    engine.advance()
    for event in archive.events(RAW):
        etype = event.get("type")
        if etype == "sample":
            engine.step(ControlSample(event["t"], event["x"], event["y"], event["z"]))
        elif etype == "control":
            action = event.get("action")
            if action == "start-phase":
                if engine.phase == "idle":
                    engine.advance()
            elif action == "break":
                engine.request_break()
            elif action == "resume":
                engine.resume()
            elif action == "set-condition":
                engine.start_adhoc_round(event["condition"])
    return ReplayResult(
        records=engine.records,
        deployed_bytes="".join(recorder.lines[DEPLOYED]).encode(),
        raw_bytes="".join(recorder.lines[RAW]).encode(),
        engine=engine,
    )


def record_protocol(user, config: Config, seed: int, root: str | Path):
    """Convenience wrapper: run the headless protocol while recording it."""
    from .engine import run_protocol

    with ArchiveWriter(root, config, seed, auto_advance=True) as writer:
        result = run_protocol(user, config, seed=seed, recorder=writer)
        if result.profile is not None:
            writer.save_profile(result.profile)
        if result.stack is not None:
            writer.save_stack(result.stack)
    return result

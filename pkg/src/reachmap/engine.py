"""Protocol session engine: training, baseline, calibration, remap rounds.

Purely sample-clocked: every state change is driven by input-sample
timestamps or explicit control calls, never the wall clock, so a recorded
stream replayed through the engine reproduces the session exactly. The live
service and the headless driver share this machinery.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Protocol

from .config import Config
from .pipeline import Pipeline, StepResult
from .profile import BiasProfile, ControlSample, build_profile
from .remap import RemapStack, compile_stack
from .synth import stable_seed
from .task import DotState, Target, TrialRecord, TrialRunner, target_lattice

NAN = float("nan")


class Recorder(Protocol):
    def record_event(self, event: dict) -> None: ...


@dataclass(frozen=True)
class RoundPlan:
    name: str
    condition: str
    target_ids: tuple[int, ...]


@dataclass
class EngineSnapshot:
    phase: str
    condition: str | None
    dot: dict
    target: dict | None
    trial_index: int
    trials_total: int
    hold_progress: float
    countdown: float | None
    break_available: bool
    f: float
    alpha: float
    compile_state: str  # "pending" | "running" | "done" | "unneeded"

    def to_message(self, t: float) -> dict:
        return {
            "v": 1,
            "type": "state",
            "t": t,
            "phase": self.phase,
            "condition": self.condition,
            "dot": self.dot,
            "target": self.target,
            "trial": self.trial_index,
            "trials_total": self.trials_total,
            "hold": self.hold_progress,
            "countdown": self.countdown,
            "break_available": self.break_available,
            "f": self.f,
            "alpha": self.alpha,
            "compile_state": self.compile_state,
        }


class SessionEngine:
    """One experiment session: fixed target lattice, seeded orders, phased rounds.

    Phase graph: idle -> training -> idle -> baseline -> idle (compile) ->
    first remap round -> idle -> second remap round -> done. With
    auto_advance the idle stops are skipped.
    """

    def __init__(
        self,
        config: Config | None = None,
        seed: int = 0,
        auto_advance: bool = False,
        recorder: Recorder | None = None,
        hold_at_breaks: bool = False,
    ):
        self.config = config or Config()
        self.seed = seed
        self.auto_advance = auto_advance
        self.hold_at_breaks = hold_at_breaks
        self.recorder = recorder
        self.targets = target_lattice()

        rng = random.Random(seed)
        training_ids = tuple(t.id for t in rng.sample(self.targets, self.config.n_training))
        all_ids = [t.id for t in self.targets]
        orders = []
        for _ in range(3):
            ids = list(all_ids)
            rng.shuffle(ids)
            orders.append(tuple(ids))
        remap_order = ["remap", "smoothed"]
        rng.shuffle(remap_order)
        self.plan: list[RoundPlan] = [
            RoundPlan("training", "raw", training_ids),
            RoundPlan("baseline", "raw", orders[0]),
            RoundPlan(f"round-{remap_order[0]}", remap_order[0], orders[1]),
            RoundPlan(f"round-{remap_order[1]}", remap_order[1], orders[2]),
        ]

        self.phase = "idle"
        self._round_idx = -1  # last finished or active plan index
        self._active: RoundPlan | None = None
        self._pipeline: Pipeline | None = None
        self._runner: TrialRunner | None = None
        self._trials_done = 0
        self._paused = False
        self.records: dict[str, list[TrialRecord]] = {p.name: [] for p in self.plan}
        self.calibration: list[ControlSample] = []
        self.profile: BiasProfile | None = None
        self.stack: RemapStack | None = None
        self.compile_state = "pending"
        self._last_step: StepResult | None = None
        self._last_t: float = 0.0

    # -- phase control -------------------------------------------------------

    def next_round(self) -> RoundPlan | None:
        idx = self._round_idx + 1
        return self.plan[idx] if idx < len(self.plan) else None

    def can_start_next(self) -> bool:
        nxt = self.next_round()
        if nxt is None or self.phase != "idle":
            return False
        if nxt.condition in ("remap", "smoothed") and self.stack is None:
            return False
        return True

    def advance(self) -> list[dict]:
        """Start the next planned round; compiles first if it is due."""
        if self.phase != "idle":
            raise RuntimeError(f"cannot advance during {self.phase!r}")
        events = []
        nxt = self.next_round()
        if nxt is None:
            self.phase = "done"
            return [self._phase_event()]
        if nxt.condition in ("remap", "smoothed") and self.stack is None:
            events.extend(self.compile_maps())
        events.extend(self.start_round_plan(nxt))
        return events

    def compile_maps(self) -> list[dict]:
        """Build the profile and stack from the baseline round's raw stream."""
        if not self.calibration:
            raise RuntimeError("no calibration samples recorded yet")
        self.compile_state = "running"
        events = [self._event({"type": "compile-status", "state": "running"})]
        profile = build_profile(self.calibration, self.config)
        stack = compile_stack(profile, self.config)
        events.extend(self.adopt_maps(profile, stack))
        return events

    def adopt_maps(self, profile: BiasProfile, stack: RemapStack) -> list[dict]:
        """Install an already-built profile and stack (e.g. compiled off-loop)."""
        self.profile = profile
        self.stack = stack
        self.compile_state = "done"
        return [
            self._event(
                {
                    "type": "compile-status",
                    "state": "done",
                    "profile_hash": stack.profile_hash,
                }
            )
        ]

    def start_round_plan(self, plan: RoundPlan) -> list[dict]:
        if self.phase != "idle":
            raise RuntimeError(f"cannot start a round during {self.phase!r}")
        self._round_idx = self.plan.index(plan)
        self._active = plan
        self._pipeline = Pipeline(self.config, stack=self.stack, condition=plan.condition)
        self._runner = None
        self._trials_done = 0
        self._paused = False
        self.phase = plan.name
        return [self._phase_event()]

    def start_adhoc_round(self, condition: str) -> list[dict]:
        """Append and start an extra full round under the given condition."""
        rng = random.Random(stable_seed(self.seed, "adhoc", len(self.plan), condition))
        ids = [t.id for t in self.targets]
        rng.shuffle(ids)
        name = f"adhoc-{condition}-{len(self.plan)}"
        plan = RoundPlan(name, condition, tuple(ids))
        self.plan.append(plan)
        self.records[name] = []
        self._round_idx = len(self.plan) - 2  # advance() semantics: plan is next
        return self.start_round_plan(plan)

    def request_break(self) -> bool:
        if self._active and not self._paused and self.break_available():
            self._paused = True
            return True
        return False

    def resume(self) -> bool:
        if self._paused:
            self._paused = False
            return True
        return False

    def break_available(self) -> bool:
        return (
            self._active is not None
            and self._runner is None
            and self._trials_done > 0
            and self._trials_done % self.config.break_every == 0
            and self._trials_done < len(self._active.target_ids)
        )

    # -- stepping ------------------------------------------------------------

    def step(self, sample: ControlSample) -> list[dict]:
        """Feed one raw input frame; returns the events it produced."""
        self._last_t = sample.t
        events: list[dict] = []
        if self._active is None and not self._paused and self.auto_advance and self.phase == "idle":
            events.extend(self.advance())  # auto sessions start on first input
        self._record({"type": "sample", "t": sample.t, "x": sample.x, "y": sample.y,
                      "z": sample.z, "phase": self.phase})
        if self._active is None or self._paused:
            events.append(self.snapshot().to_message(sample.t))
            return events
        results = self._pipeline.process(sample)
        for res in results:
            self._last_step = res
            self._record(
                {
                    "type": "deployed",
                    "t": res.t,
                    "x": res.x,
                    "y": res.y,
                    "z": res.z,
                    "f": res.f,
                    "alpha": res.alpha,
                    "condition": res.condition,
                    "bin": res.bin_index,
                    "synthesized": res.synthesized,
                    "phase": self.phase,
                }
            )
            if self._active.name == "baseline" and not res.synthesized:
                self.calibration.append(sample)
            if self._runner is None:
                target = self.targets[self._active.target_ids[self._trials_done]]
                self._runner = TrialRunner(target, self._active.condition, self.config, res.t)
            raw = sample if not res.synthesized else ControlSample(res.t, NAN, NAN, NAN)
            record = self._runner.step(raw, res)
            if record is not None:
                events.extend(self._finish_trial(record))
                if self._active is None:
                    break
        events.append(self.snapshot().to_message(sample.t))
        return events

    def _finish_trial(self, record: TrialRecord) -> list[dict]:
        events = []
        self.records[self._active.name].append(record)
        self._trials_done += 1
        self._runner = None
        self._record({"type": "trial-end", "phase": self.phase, **record.summary()})
        events.append(self._event({"type": "trial-result", **record.summary()}))
        if self._active.name == "baseline":
            events.append(
                self._event(
                    {
                        "type": "calibration-progress",
                        "trials": self._trials_done,
                        "samples": len(self.calibration),
                    }
                )
            )
        if self._trials_done >= len(self._active.target_ids):
            self._active = None
            self._pipeline = None
            self.phase = "idle"
            events.append(self._phase_event())
            if self.auto_advance:
                events.extend(self.advance())
        elif self.break_available():
            events.append(self._event({"type": "break-available", "trials": self._trials_done}))
            if self.hold_at_breaks:
                self._paused = True
        return events

    # -- introspection -------------------------------------------------------

    def snapshot(self) -> EngineSnapshot:
        if self._runner is not None:
            dot = self._runner.dot
            target = self._runner.target
            hold = self._runner.hold_progress(self._last_t)
            countdown = None
            if self._runner.hold_start is not None:
                countdown = max(
                    0.0, self.config.hold_seconds - (self._last_t - self._runner.hold_start)
                )
        else:
            dot = DotState()
            target = None
            if self._active is not None and self._trials_done < len(self._active.target_ids):
                target = self.targets[self._active.target_ids[self._trials_done]]
            hold = 0.0
            countdown = None
        return EngineSnapshot(
            phase=self.phase if not self._paused else "break",
            condition=self._active.condition if self._active else None,
            dot={"x": dot.x, "y": dot.y, "size": dot.size},
            target=None
            if target is None
            else {"id": target.id, "x": target.x, "y": target.y, "z": target.z},
            trial_index=self._trials_done,
            trials_total=len(self._active.target_ids) if self._active else 0,
            hold_progress=hold,
            countdown=countdown,
            break_available=self.break_available(),
            f=self._last_step.f if self._last_step else 0.0,
            alpha=self._last_step.alpha if self._last_step else 0.0,
            compile_state=self.compile_state,
        )

    def current_dot(self) -> DotState:
        return self._runner.dot if self._runner is not None else DotState()

    def current_target(self) -> Target | None:
        if self._runner is not None:
            return self._runner.target
        if self._active is not None and self._trials_done < len(self._active.target_ids):
            return self.targets[self._active.target_ids[self._trials_done]]
        return None

    def _phase_event(self) -> dict:
        event = self._event({"type": "phase", "phase": self.phase})
        return event

    def _event(self, payload: dict) -> dict:
        payload.setdefault("v", 1)
        self._record({"type": f"event:{payload['type']}", **{k: v for k, v in payload.items() if k != "type"}})
        return payload

    def _record(self, event: dict) -> None:
        if self.recorder is not None:
            self.recorder.record_event(event)


@dataclass
class ProtocolResult:
    rounds: dict[str, list[TrialRecord]]
    profile: BiasProfile | None
    stack: RemapStack | None
    plan: list[RoundPlan]
    calibration_size: int

    def round_by_condition(self, condition: str) -> list[TrialRecord]:
        for plan in self.plan:
            if plan.condition == condition and plan.name != "training":
                return self.rounds[plan.name]
        raise KeyError(condition)


def run_protocol(user, config: Config | None = None, seed: int = 0, recorder=None) -> ProtocolResult:
    """Drive a synthetic user through the full session headlessly.

    Training, baseline, profile build + map compile, then the two remap
    rounds in the seeded order. Deterministic for a given user and seed.
    """
    config = config or Config()
    engine = SessionEngine(config, seed=seed, auto_advance=True, recorder=recorder)
    engine.advance()
    dt = 1.0 / config.sample_rate
    t = 0.0
    rng: random.Random | None = None
    rng_key: tuple | None = None
    while engine.phase != "done":
        target = engine.current_target()
        if target is None:  # idle gap between rounds without auto transition
            engine.advance()
            continue
        key = (engine.phase, target.id)
        if key != rng_key:
            rng_key = key
            rng = random.Random(stable_seed(seed, engine.phase, target.id))
        sample = user.sample(t, engine.current_dot(), target, rng)
        engine.step(sample)
        t += dt
    return ProtocolResult(
        rounds=engine.records,
        profile=engine.profile,
        stack=engine.stack,
        plan=engine.plan,
        calibration_size=len(engine.calibration),
    )

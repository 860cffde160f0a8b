"""3D-center-out reaching task: targets, trial integration, synthetic users.

The controllable dot starts each trial centered at neutral. The deployed
signal is a velocity command toward the commanded point: the dot moves toward
(out_x, out_y) and its size toward out_z at a rate proportional to the gap,
so holding a far target requires holding a matching deflection. A trial
completes after an unbroken 2 s hold inside tolerance, or times out.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .config import Config
from .pipeline import Pipeline, StepResult
from .profile import ControlSample, z_bin_index
from .remap import RemapStack
from .synth import PRESETS, BiasModel, stable_seed

POSITION_LEVELS = (-0.9, -0.45, 0.0, 0.45, 0.9)
SIZE_LEVELS = (-0.8, -0.4, 0.0, 0.4, 0.8)


@dataclass(frozen=True)
class Target:
    id: int
    x: float
    y: float
    z: float  # size level

    @property
    def z_bin(self) -> int:
        return z_bin_index(self.z, len(SIZE_LEVELS))


def target_lattice() -> tuple[Target, ...]:
    """The fixed 5 x 5 x 5 target set: 25 positions at 5 size levels."""
    targets = []
    tid = 0
    for z in SIZE_LEVELS:
        for y in POSITION_LEVELS:
            for x in POSITION_LEVELS:
                targets.append(Target(tid, x, y, z))
                tid += 1
    return tuple(targets)


class TrialFrame(NamedTuple):
    t: float
    raw_x: float
    raw_y: float
    raw_z: float
    out_x: float
    out_y: float
    out_z: float
    dot_x: float
    dot_y: float
    dot_size: float


@dataclass
class TrialRecord:
    target: Target
    condition: str
    outcome: str  # "completed" | "timed-out"
    time_to_first_reach: float | None
    path_length: float
    hold_satisfied: bool
    duration: float
    trajectory: list[TrialFrame] = field(default_factory=list, repr=False)

    @property
    def completed(self) -> bool:
        return self.outcome == "completed"

    def summary(self) -> dict:
        return {
            "target": {"id": self.target.id, "x": self.target.x, "y": self.target.y, "z": self.target.z},
            "condition": self.condition,
            "outcome": self.outcome,
            "time_to_first_reach": self.time_to_first_reach,
            "path_length": self.path_length,
            "hold_satisfied": self.hold_satisfied,
            "duration": self.duration,
        }

    @classmethod
    def from_summary(cls, data: dict) -> "TrialRecord":
        t = data["target"]
        return cls(
            target=Target(t["id"], t["x"], t["y"], t["z"]),
            condition=data["condition"],
            outcome=data["outcome"],
            time_to_first_reach=data["time_to_first_reach"],
            path_length=data["path_length"],
            hold_satisfied=data["hold_satisfied"],
            duration=data["duration"],
        )


@dataclass
class DotState:
    x: float = 0.0
    y: float = 0.0
    size: float = 0.0


class TrialRunner:
    """Integrates one trial from deployed outputs; condition-blind by design:
    only the output stream moves the dot."""

    def __init__(self, target: Target, condition: str, config: Config, start_t: float):
        self.target = target
        self.condition = condition
        self.config = config
        self.start_t = start_t
        self.dot = DotState()
        self.trajectory: list[TrialFrame] = []
        self.hold_start: float | None = None
        self.first_reach: float | None = None
        self.path_length = 0.0
        self._prev_t: float | None = None
        self.record: TrialRecord | None = None

    def in_tolerance(self) -> bool:
        tol = self.config.tolerance
        dist = math.hypot(self.dot.x - self.target.x, self.dot.y - self.target.y)
        return dist <= tol and abs(self.dot.size - self.target.z) <= tol

    def hold_progress(self, t: float) -> float:
        if self.hold_start is None:
            return 0.0
        return min(1.0, (t - self.hold_start) / self.config.hold_seconds)

    def step(self, raw: ControlSample, deployed: StepResult) -> TrialRecord | None:
        """Advance the dot by one frame; returns the record once the trial ends."""
        if self.record is not None:
            return self.record
        t = deployed.t
        dt = 0.0 if self._prev_t is None else t - self._prev_t
        self._prev_t = t

        px, py, ps = self.dot.x, self.dot.y, self.dot.size
        g_v = self.config.gain_v * dt
        g_s = self.config.gain_s * dt
        self.dot.x = _clamp(px + g_v * (deployed.x - px))
        self.dot.y = _clamp(py + g_v * (deployed.y - py))
        self.dot.size = _clamp(ps + g_s * (deployed.z - ps))
        self.path_length += math.hypot(self.dot.x - px, self.dot.y - py)

        self.trajectory.append(
            TrialFrame(
                t, raw.x, raw.y, raw.z,
                deployed.x, deployed.y, deployed.z,
                self.dot.x, self.dot.y, self.dot.size,
            )
        )

        if self.in_tolerance():
            if self.first_reach is None:
                self.first_reach = t - self.start_t
            if self.hold_start is None:
                self.hold_start = t
            if t - self.hold_start >= self.config.hold_seconds:
                return self._finish(t, "completed")
        else:
            self.hold_start = None

        if t - self.start_t >= self.config.timeout_seconds:
            return self._finish(t, "timed-out")
        return None

    def _finish(self, t: float, outcome: str) -> TrialRecord:
        self.record = TrialRecord(
            target=self.target,
            condition=self.condition,
            outcome=outcome,
            time_to_first_reach=self.first_reach,
            path_length=self.path_length,
            hold_satisfied=outcome == "completed",
            duration=t - self.start_t,
            trajectory=self.trajectory,
        )
        return self.record


def _clamp(v: float) -> float:
    return -1.0 if v < -1.0 else (1.0 if v > 1.0 else v)


@dataclass
class SyntheticUser:
    """Proportional-control operator with a parametric bias.

    Intends a deflection proportional to the remaining error on each axis,
    clamped to full deflection; the bias model distorts what the interface
    actually reports.
    """

    bias: BiasModel = field(default_factory=BiasModel)
    policy_gain: float = 40.0
    name: str = "custom"

    @classmethod
    def preset(cls, name: str, policy_gain: float = 40.0) -> "SyntheticUser":
        return cls(bias=PRESETS[name], policy_gain=policy_gain, name=name)

    def sample(
        self, t: float, dot: DotState, target: Target | None, rng: random.Random
    ) -> ControlSample:
        if target is None:
            ix = iy = iz = 0.0
        else:
            ix = _clamp(self.policy_gain * (target.x - dot.x))
            iy = _clamp(self.policy_gain * (target.y - dot.y))
            iz = _clamp(self.policy_gain * (target.z - dot.size))
        x, y, z = self.bias.apply(t, ix, iy, iz, rng)
        return ControlSample(t, x, y, z)


def run_trial(
    user: SyntheticUser,
    target: Target,
    condition: str,
    stack: RemapStack | None = None,
    config: Config | None = None,
    seed: int = 0,
    start_t: float = 0.0,
    pipeline: Pipeline | None = None,
    on_frame: Callable[[ControlSample, StepResult], None] | None = None,
) -> TrialRecord:
    """Run one closed-loop trial with a synthetic user at the logging rate."""
    config = config or Config()
    pipe = pipeline or Pipeline(config, stack=stack, condition=condition)
    runner = TrialRunner(target, condition, config, start_t)
    rng = random.Random(stable_seed(seed, target.id, condition))
    dt = 1.0 / config.sample_rate
    t = start_t
    while True:
        sample = user.sample(t, runner.dot, target, rng)
        deployed = pipe.step(sample)
        if on_frame is not None:
            on_frame(sample, deployed)
        record = runner.step(sample, deployed)
        if record is not None:
            return record
        t += dt

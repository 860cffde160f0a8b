"""Real-time deployment: passthrough / remap / smoothed-remap conditions.

One Pipeline instance owns the per-session deployment state (smoothing ring
buffer, instability tracker, active twist bin) and is stepped by exactly one
consumer. The smoothed condition blends the current remapped signal with its
ring-buffer mean, weighted by the instability frequency.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .config import Config
from .profile import ControlSample, InflectionTracker
from .remap import RemapStack, lookup

CONDITIONS = ("raw", "remap", "smoothed")


def alpha_map(f: float, f_lower: float = 8.0, f_upper: float = 20.0) -> float:
    """Blend weight from instability frequency: 0 below f_lower, 1 at or above
    f_upper, linear in between."""
    if f < f_lower:
        return 0.0
    if f >= f_upper:
        return 1.0
    return (f - f_lower) / (f_upper - f_lower)


@dataclass(frozen=True)
class StepResult:
    t: float
    x: float
    y: float
    z: float
    f: float
    alpha: float
    condition: str
    bin_index: int | None
    synthesized: bool = False

    @property
    def output(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


def _clamp(v: float) -> float:
    return -1.0 if v < -1.0 else (1.0 if v > 1.0 else v)


class Pipeline:
    """Single-writer deployment state machine; step() once per input frame."""

    def __init__(
        self,
        config: Config | None = None,
        stack: RemapStack | None = None,
        condition: str = "raw",
    ):
        self.config = config or Config()
        self.stack = stack
        self._buffer: deque[tuple[float, float, float]] = deque(maxlen=self.config.k)
        self._tracker = InflectionTracker(self.config)
        self._bin: int | None = None
        self._last_t: float | None = None
        self.condition = "raw"
        self.set_condition(condition)

    @property
    def last_t(self) -> float | None:
        return self._last_t

    def set_condition(self, condition: str) -> None:
        if condition not in CONDITIONS:
            raise ValueError(f"unknown condition {condition!r}")
        if condition in ("remap", "smoothed") and self.stack is None:
            raise ValueError(f"condition {condition!r} needs a compiled stack")
        if condition != self.condition:
            self._buffer.clear()
        self.condition = condition

    def buffer_mean(self) -> tuple[float, float, float]:
        if not self._buffer:
            return (0.0, 0.0, 0.0)
        n = len(self._buffer)
        return (
            sum(v[0] for v in self._buffer) / n,
            sum(v[1] for v in self._buffer) / n,
            sum(v[2] for v in self._buffer) / n,
        )

    def step(self, sample: ControlSample) -> StepResult:
        """Process one raw frame into a deployed output."""
        raw = sample.clamped()
        f = self._tracker.push(raw)
        alpha = alpha_map(f, self.config.f_lower, self.config.f_upper)

        if self.condition == "raw":
            basis = (raw.x, raw.y, raw.z)
            self._buffer.append(basis)
            out = basis
            bin_index = None
        else:
            self._bin = self.stack.select_bin(raw.z, self._bin, self.config.bin_hysteresis)
            basis = lookup(self.stack, raw, bin_override=self._bin)
            self._buffer.append(basis)
            bin_index = self._bin
            if self.condition == "remap":
                out = basis
            else:
                mean = self.buffer_mean()
                out = tuple(
                    (1.0 - alpha) * b + alpha * m for b, m in zip(basis, mean)
                )

        self._last_t = raw.t
        return StepResult(
            t=raw.t,
            x=_clamp(out[0]),
            y=_clamp(out[1]),
            z=_clamp(out[2]),
            f=f,
            alpha=alpha,
            condition=self.condition,
            bin_index=bin_index,
        )

    def recover(self, gap_start: float, n_frames: int) -> list[StepResult]:
        """Synthesize outputs for missed frames after a signal drop-out.

        Holds the ring-buffer mean for up to k frames, then decays linearly to
        neutral over a further k frames, then holds neutral. Synthesized
        frames never feed the buffer or the instability tracker.
        """
        k = self.config.k
        mean = self.buffer_mean()
        dt = 1.0 / self.config.sample_rate
        results = []
        for i in range(1, n_frames + 1):
            if i <= k:
                out = mean
            elif i <= 2 * k:
                w = 1.0 - (i - k) / k
                out = (mean[0] * w, mean[1] * w, mean[2] * w)
            else:
                out = (0.0, 0.0, 0.0)
            results.append(
                StepResult(
                    t=gap_start + i * dt,
                    x=_clamp(out[0]),
                    y=_clamp(out[1]),
                    z=_clamp(out[2]),
                    f=self._tracker.frequency,
                    alpha=alpha_map(self._tracker.frequency, self.config.f_lower, self.config.f_upper),
                    condition=self.condition,
                    bin_index=self._bin if self.condition != "raw" else None,
                    synthesized=True,
                )
            )
        return results

    def missed_frames(self, t: float) -> int:
        """Frames lost between the last processed sample and time t, if the
        inter-sample interval exceeds the drop-out threshold."""
        if self._last_t is None:
            return 0
        dt = 1.0 / self.config.sample_rate
        gap = t - self._last_t
        if gap <= self.config.gap_frames * dt:
            return 0
        return max(0, int(round(gap / dt)) - 1)

    def process(self, sample: ControlSample) -> list[StepResult]:
        """Step one frame, first filling any detected drop-out gap with
        synthesized outputs."""
        results: list[StepResult] = []
        missed = self.missed_frames(sample.t)
        if missed:
            results.extend(self.recover(self._last_t, missed))
        results.append(self.step(sample))
        return results

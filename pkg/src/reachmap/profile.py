"""Reachable-set estimation: sample filtering, instability detection, bias profiles.

A raw sample stream is reduced to the user's reachable set by dropping
deadzone samples and samples taken during unstable motion (inflection
frequency above the omission threshold), then summarized per twist bin as a
convex hull plus location/spread statistics.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import Config
from .geometry import ConvexHull, DegenerateInput, Point2, convex_hull


class InsufficientData(ValueError):
    """No twist bin holds enough usable samples to form a hull."""


@dataclass(frozen=True)
class ControlSample:
    """One timestamped interface reading; components clamped to [-1, 1]."""

    t: float
    x: float
    y: float
    z: float

    def clamped(self) -> "ControlSample":
        c = lambda v: min(1.0, max(-1.0, v))
        return ControlSample(self.t, c(self.x), c(self.y), c(self.z))


def angle_between(ax: float, ay: float, bx: float, by: float) -> float:
    """Unsigned angle between two nonzero vectors, in [0, pi]."""
    cross = ax * by - ay * bx
    dot = ax * bx + ay * by
    return math.atan2(abs(cross), dot)


def count_inflections(
    window: Sequence[ControlSample],
    min_delta: float = 1e-4,
    angle_threshold_deg: float = 30.0,
) -> int:
    """Number of trace closures: direction changes >= the threshold between
    successive nonzero planar deltas. Deltas shorter than min_delta carry no
    direction and are skipped."""
    threshold = math.radians(angle_threshold_deg) - 1e-9
    count = 0
    prev_dx = prev_dy = None
    for a, b in zip(window, window[1:]):
        dx, dy = b.x - a.x, b.y - a.y
        if math.hypot(dx, dy) < min_delta:
            continue
        if prev_dx is not None and angle_between(prev_dx, prev_dy, dx, dy) >= threshold:
            count += 1
        prev_dx, prev_dy = dx, dy
    return count


def inflection_frequency(
    window: Sequence[ControlSample],
    f_rate: float = 40.0,
    min_delta: float = 1e-4,
    angle_threshold_deg: float = 30.0,
) -> float:
    """Trace-closure rate over the window, in Hz.

    The window spans len(window) - 1 sampling intervals at f_rate; a full
    window of k intervals therefore covers k / f_rate seconds.
    """
    intervals = len(window) - 1
    if intervals < 1:
        return 0.0
    duration = intervals / f_rate
    return count_inflections(window, min_delta, angle_threshold_deg) / duration


class InflectionTracker:
    """Streaming inflection frequency over the last k analysis intervals.

    Incoming samples are decimated to the analysis rate by keeping the first
    sample at or after each analysis tick, so 60 Hz input is analyzed at
    f_rate without assuming exact input timing.
    """

    def __init__(self, config: Config):
        self._config = config
        self._period = 1.0 / config.f_rate
        self._window: deque[ControlSample] = deque(maxlen=config.k + 1)
        self._next_tick: float | None = None
        self._f = 0.0
        self.accepted = 0

    @property
    def frequency(self) -> float:
        return self._f

    def reset(self) -> None:
        self._window.clear()
        self._next_tick = None
        self._f = 0.0
        self.accepted = 0

    def push(self, sample: ControlSample) -> float:
        if self._next_tick is None or sample.t >= self._next_tick - 1e-9:
            self._window.append(sample)
            self.accepted += 1
            if self._next_tick is None:
                self._next_tick = sample.t + self._period
            else:
                self._next_tick += self._period
                if sample.t >= self._next_tick:  # gap: re-anchor to the stream
                    self._next_tick = sample.t + self._period
            c = self._config
            self._f = inflection_frequency(
                list(self._window), c.f_rate, c.min_delta, c.angle_threshold_deg
            )
        return self._f


def resample_nearest(stream: Sequence[ControlSample], rate: float) -> list[ControlSample]:
    """Downsample to the given rate, keeping the sample nearest each tick.

    Streams at or below the target rate are returned unchanged.
    """
    if len(stream) < 2:
        return list(stream)
    span = stream[-1].t - stream[0].t
    if span <= 0 or (len(stream) - 1) / span <= rate * 1.001:
        return list(stream)
    period = 1.0 / rate
    out: list[ControlSample] = []
    idx = 0
    n_ticks = int(math.floor(span / period)) + 1
    for n in range(n_ticks):
        tick = stream[0].t + n * period
        while idx + 1 < len(stream) and abs(stream[idx + 1].t - tick) <= abs(stream[idx].t - tick):
            idx += 1
        if not out or stream[idx] is not out[-1]:
            out.append(stream[idx])
    return out


def filter_reachable(
    stream: Sequence[ControlSample],
    config: Config | None = None,
    f_threshold: float | None = None,
    deadzone_radius: float | None = None,
) -> tuple[list[ControlSample], list[ControlSample]]:
    """Split a time-ordered stream into (retained, omitted).

    A sample is omitted when the rolling inflection frequency of the k most
    recent analysis intervals exceeds f_threshold, or when it lies inside the
    radial deadzone. The stream is assumed to be at the analysis rate; use
    resample_nearest first for faster input.
    """
    config = config or Config()
    f_threshold = config.omission_threshold if f_threshold is None else f_threshold
    deadzone_radius = config.deadzone if deadzone_radius is None else deadzone_radius
    tracker = InflectionTracker(config)
    retained: list[ControlSample] = []
    omitted: list[ControlSample] = []
    for sample in stream:
        f = tracker.push(sample)
        if f > f_threshold or math.hypot(sample.x, sample.y) < deadzone_radius:
            omitted.append(sample)
        else:
            retained.append(sample)
    return retained, omitted


@dataclass(frozen=True)
class XiStats:
    """Location and spread of a planar sample set, plus its center of mass."""

    mu_x: float
    sigma_x: float
    mu_y: float
    sigma_y: float
    cm_x: float
    cm_y: float

    @classmethod
    def of(cls, samples: Sequence[ControlSample]) -> "XiStats":
        n = len(samples)
        mx = sum(s.x for s in samples) / n
        my = sum(s.y for s in samples) / n
        sx = math.sqrt(sum((s.x - mx) ** 2 for s in samples) / n)
        sy = math.sqrt(sum((s.y - my) ** 2 for s in samples) / n)
        return cls(mx, sx, my, sy, mx, my)

    def to_dict(self) -> dict:
        return {
            "mu_x": self.mu_x, "sigma_x": self.sigma_x,
            "mu_y": self.mu_y, "sigma_y": self.sigma_y,
            "cm_x": self.cm_x, "cm_y": self.cm_y,
        }


@dataclass(frozen=True)
class BinProfile:
    index: int
    z_lo: float
    z_hi: float
    n_samples: int
    hull: ConvexHull
    xi: XiStats | None
    borrowed_from: int | None = None
    cm_inside: bool = True


@dataclass(frozen=True)
class BiasProfile:
    """Filtered reachable set summary: global and per-twist-bin statistics."""

    xi: XiStats
    bins: tuple[BinProfile, ...]
    z_range: tuple[float, float]
    retained_fraction: float
    deadzone_radius: float
    config: dict = field(default_factory=dict)

    @property
    def m_z(self) -> int:
        return len(self.bins)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "xi": self.xi.to_dict(),
            "bins": [
                {
                    "index": b.index,
                    "z_lo": b.z_lo,
                    "z_hi": b.z_hi,
                    "n_samples": b.n_samples,
                    "hull": {
                        "vertices": [[v.x, v.y] for v in b.hull.vertices],
                        "vertex_weights": list(b.hull.vertex_weights),
                        "centroid": [b.hull.centroid.x, b.hull.centroid.y],
                    },
                    "xi": b.xi.to_dict() if b.xi else None,
                    "borrowed_from": b.borrowed_from,
                    "cm_inside": b.cm_inside,
                }
                for b in self.bins
            ],
            "z_range": list(self.z_range),
            "retained_fraction": self.retained_fraction,
            "deadzone_radius": self.deadzone_radius,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "BiasProfile":
        if data.get("version") != 1:
            raise ValueError(f"unsupported profile version {data.get('version')!r}")
        bins = []
        for b in data["bins"]:
            verts = tuple(Point2(*v) for v in b["hull"]["vertices"])
            simplices = tuple((i, (i + 1) % len(verts)) for i in range(len(verts)))
            hull = ConvexHull(
                verts,
                simplices,
                tuple(b["hull"]["vertex_weights"]),
                Point2(*b["hull"]["centroid"]),
            )
            xi = XiStats(**b["xi"]) if b["xi"] else None
            bins.append(
                BinProfile(
                    b["index"], b["z_lo"], b["z_hi"], b["n_samples"],
                    hull, xi, b["borrowed_from"], b["cm_inside"],
                )
            )
        return cls(
            xi=XiStats(**data["xi"]),
            bins=tuple(bins),
            z_range=tuple(data["z_range"]),
            retained_fraction=data["retained_fraction"],
            deadzone_radius=data["deadzone_radius"],
            config=data.get("config", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "BiasProfile":
        return cls.from_dict(json.loads(text))


def z_bin_index(z: float, m_z: int) -> int:
    """Equal-width bin of [-1, 1] containing z; z = 1 folds into the top bin."""
    return min(m_z - 1, max(0, int((z + 1.0) / 2.0 * m_z)))


def z_bin_edges(index: int, m_z: int) -> tuple[float, float]:
    width = 2.0 / m_z
    return -1.0 + index * width, -1.0 + (index + 1) * width


def build_profile(stream: Iterable[ControlSample], config: Config | None = None) -> BiasProfile:
    """Filter a raw stream and summarize the reachable set per twist bin.

    Input faster than the analysis rate is downsampled first. Bins that cannot
    form a hull borrow the nearest populated bin's hull and are flagged.
    """
    config = config or Config()
    clamped = [s.clamped() for s in stream]
    analyzed = resample_nearest(clamped, config.f_rate)
    retained, _ = filter_reachable(analyzed, config)
    if len(retained) < 3:
        raise InsufficientData(f"only {len(retained)} samples retained")

    groups: list[list[ControlSample]] = [[] for _ in range(config.m_z)]
    for s in retained:
        groups[z_bin_index(s.z, config.m_z)].append(s)

    hulls: list[ConvexHull | None] = []
    for samples in groups:
        try:
            hulls.append(
                convex_hull([Point2(s.x, s.y) for s in samples], config.weights_radius)
                if len(samples) >= 3
                else None
            )
        except DegenerateInput:
            hulls.append(None)
    populated = [i for i, h in enumerate(hulls) if h is not None]
    if not populated:
        raise InsufficientData("no twist bin has 3 non-collinear samples")

    bins = []
    for i in range(config.m_z):
        z_lo, z_hi = z_bin_edges(i, config.m_z)
        if hulls[i] is not None:
            hull, borrowed = hulls[i], None
        else:
            donor = min(populated, key=lambda j: (abs(j - i), j))
            hull, borrowed = hulls[donor], donor
        xi = XiStats.of(groups[i]) if groups[i] else None
        cm_inside = xi is None or hull.contains(Point2(xi.cm_x, xi.cm_y))
        bins.append(
            BinProfile(i, z_lo, z_hi, len(groups[i]), hull, xi, borrowed, cm_inside)
        )

    zs = [s.z for s in retained]
    return BiasProfile(
        xi=XiStats.of(retained),
        bins=tuple(bins),
        z_range=(min(zs), max(zs)),
        retained_fraction=len(retained) / len(analyzed),
        deadzone_radius=config.deadzone,
        config=config.to_dict(),
    )

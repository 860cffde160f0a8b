"""Synthetic interface signals: parametric user bias models and coverage sweeps.

Stands in for live operators when calibrating and benchmarking headlessly.
Every generator is deterministic for a given seed.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass

from .config import Config
from .profile import ControlSample


def _clamp(v: float, lo: float = -1.0, hi: float = 1.0) -> float:
    return min(hi, max(lo, v))


def stable_seed(*parts) -> int:
    """Platform-stable integer seed derived from arbitrary atoms."""
    digest = hashlib.sha256("|".join(repr(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class BiasModel:
    """Affine distortion plus per-axis saturation, with optional tremor.

    Models how an impaired operator's intended deflection turns into the
    signal the interface actually reports.
    """

    scale: tuple[float, float, float] = (1.0, 1.0, 1.0)
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    saturation: tuple[tuple[float, float], ...] = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
    tremor_amplitude: float = 0.0
    tremor_frequency: float = 0.0  # Hz
    noise: float = 0.0

    def apply(self, t: float, x: float, y: float, z: float, rng: random.Random | None = None) -> tuple[float, float, float]:
        sx, sy, sz = self.scale
        ox, oy, oz = self.offset
        vx = sx * x + ox
        vy = sy * y + oy
        vz = sz * z + oz
        if self.tremor_amplitude > 0.0:
            phase = 2.0 * math.pi * self.tremor_frequency * t
            vx += self.tremor_amplitude * math.sin(phase)
            vy += self.tremor_amplitude * math.cos(phase * 1.13)
        if self.noise > 0.0 and rng is not None:
            vx += rng.uniform(-self.noise, self.noise)
            vy += rng.uniform(-self.noise, self.noise)
            vz += rng.uniform(-self.noise, self.noise)
        (lx, hx), (ly, hy), (lz, hz) = self.saturation
        return (
            _clamp(_clamp(vx, lx, hx)),
            _clamp(_clamp(vy, ly, hy)),
            _clamp(_clamp(vz, lz, hz)),
        )


PRESETS: dict[str, BiasModel] = {
    "identity": BiasModel(),
    "contraction": BiasModel(scale=(0.5, 0.5, 0.5)),
    "offset": BiasModel(scale=(0.4, 0.4, 0.4), offset=(0.3, 0.1, 0.0)),
    "twist-asymmetric": BiasModel(saturation=((-1.0, 1.0), (-1.0, 1.0), (-1.0, 0.4))),
    "tremor-8hz": BiasModel(tremor_amplitude=0.08, tremor_frequency=8.0),
    "combined": BiasModel(
        scale=(0.6, 0.6, 0.6),
        offset=(0.2, -0.1, 0.0),
        tremor_amplitude=0.04,
        tremor_frequency=9.0,
    ),
}


def coverage_sweep(
    config: Config | None = None,
    bias: BiasModel | None = None,
    rate: float | None = None,
    laps_per_level: int = 10,
    angular_speed: float = 2.4,
    seed: int = 0,
) -> list[ControlSample]:
    """Deterministic full-coverage calibration stream.

    Per twist level, traces an outward spiral clamped at the square boundary
    (so the outer laps ride the boundary through the corners) while the twist
    axis sweeps its bin as a triangle wave. Slow enough that no sample is
    dropped as unstable; starts outside the deadzone.
    """
    config = config or Config()
    rate = rate or config.f_rate
    dt = 1.0 / rate
    rng = random.Random(seed)
    level_duration = laps_per_level * 2.0 * math.pi / angular_speed
    steps = int(level_duration / dt)
    r0, r1 = 0.08, 1.7
    samples: list[ControlSample] = []
    t = 0.0
    bin_width = 2.0 / config.m_z
    for level in range(config.m_z):
        z_center = -1.0 + (level + 0.5) * bin_width
        for i in range(steps):
            frac = i / steps
            r = r0 + (r1 - r0) * frac
            phi = angular_speed * i * dt
            x = _clamp(r * math.cos(phi))
            y = _clamp(r * math.sin(phi))
            # triangle wave across the bin, shaved to stay inside it
            tri = 2.0 * abs(2.0 * ((3.0 * frac) % 1.0) - 1.0) - 1.0
            z = z_center + 0.4999 * bin_width * tri
            if bias is not None:
                x, y, z = bias.apply(t, x, y, z, rng)
            samples.append(ControlSample(t, x, y, z))
            t += dt
    return samples

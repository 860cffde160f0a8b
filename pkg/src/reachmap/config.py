"""Runtime configuration shared across calibration, compilation, and deployment."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path


@dataclass(frozen=True)
class Config:
    """All tunable parameters with their shipping defaults.

    The signal-analysis block (f_lower .. deadzone) governs instability
    detection and omission; the grid block governs map compilation; the task
    block governs the 3D-center-out bench.
    """

    # Signal analysis / smoothing
    f_lower: float = 8.0           # Hz, below this alpha = 0
    f_upper: float = 20.0          # Hz, at/above this alpha = 1
    f_rate: float = 40.0           # Hz, analysis rate for inflection counting
    k: int = 20                    # smoothing window, in samples / analysis intervals
    omission_threshold: float = 8.0  # Hz, samples above are excluded from the reachable set
    deadzone: float = 0.05         # radial deadzone, fraction of half-range
    angle_threshold_deg: float = 30.0  # direction change that closes a trace
    min_delta: float = 1e-4        # displacement below this has no direction

    # Remap grid
    m_x: int = 160
    m_y: int = 160
    m_z: int = 5
    eta: float = 0.5               # ray-march step length
    n_levels: int = 10             # diagnostic level-set count per grid
    z_stretch: bool = True         # stretch the retained z-range onto [-1, 1]
    bin_hysteresis: float = 0.02   # u_z band before switching grids

    # Sampling / deployment
    sample_rate: float = 60.0      # Hz, raw logging rate
    gap_frames: int = 3            # missed frames before drop-out recovery engages

    # Task bench
    gain_v: float = 2.0            # 1/s, dot tracking rate toward commanded position
    gain_s: float = 2.0            # 1/s, size tracking rate toward commanded size
    policy_gain: float = 40.0      # synthetic-user proportional gain
    tolerance: float = 0.05        # position distance and size difference for a hold
    hold_seconds: float = 2.0
    timeout_seconds: float = 45.0
    n_targets: int = 125
    n_training: int = 25
    break_every: int = 25

    @property
    def cell_width(self) -> float:
        return 2.0 / self.m_x

    @property
    def weights_radius(self) -> float:
        # "proximity" for hull vertex weights: two grid-cell widths
        return 2.0 * self.cell_width

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    @classmethod
    def load(cls, path: str | Path) -> "Config":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


DEFAULT_CONFIG = Config()

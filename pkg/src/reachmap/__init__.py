"""reachmap: bias-aware control-interface remapping.

Estimate a user's reachable control space from sampled interface signals,
compile a per-twist-bin radial stretch map onto the full space, and deploy
it in real time with instability-weighted smoothing and drop-out recovery.
"""

from .config import Config
from .engine import ProtocolResult, SessionEngine, run_protocol
from .geometry import Box, ConvexHull, Disk, Point2, convex_hull, partition_level_sets, ray_to_boundary
from .metrics import MetricsReport, categorize, path_efficiency, time_to_first_reach
from .pipeline import Pipeline, StepResult, alpha_map
from .profile import (
    BiasProfile,
    ControlSample,
    build_profile,
    filter_reachable,
    inflection_frequency,
)
from .remap import RemapStack, compile_grid, compile_stack, load_stack, lookup, save_stack
from .store import ArchiveWriter, SessionArchive, record_protocol, replay
from .synth import PRESETS, BiasModel, coverage_sweep
from .task import SyntheticUser, Target, TrialRecord, run_trial, target_lattice

__version__ = "0.1.0"

__all__ = [
    "ArchiveWriter",
    "BiasModel",
    "BiasProfile",
    "Box",
    "Config",
    "ControlSample",
    "ConvexHull",
    "Disk",
    "MetricsReport",
    "PRESETS",
    "Pipeline",
    "Point2",
    "ProtocolResult",
    "RemapStack",
    "SessionArchive",
    "SessionEngine",
    "StepResult",
    "SyntheticUser",
    "Target",
    "TrialRecord",
    "alpha_map",
    "build_profile",
    "categorize",
    "compile_grid",
    "compile_stack",
    "convex_hull",
    "coverage_sweep",
    "filter_reachable",
    "inflection_frequency",
    "load_stack",
    "lookup",
    "partition_level_sets",
    "path_efficiency",
    "ray_to_boundary",
    "record_protocol",
    "replay",
    "run_protocol",
    "run_trial",
    "save_stack",
    "target_lattice",
    "time_to_first_reach",
]

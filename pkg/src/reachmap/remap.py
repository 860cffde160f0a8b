"""Compile bias profiles into precomputed radial stretch maps.

Each twist bin's hull becomes a lookup grid realizing the discrete radial
mapping: rays from the hull centroid are stretched so the hull boundary lands
on the full-space boundary. See ALGORITHM.md for the derivation and the
saturation / interpolation choices.
"""

from __future__ import annotations

import json
import math
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import Config
from .geometry import (
    Point2,
    box_distances,
    cell_centers,
    hull_distances,
    partition_level_sets,
)
from .profile import BiasProfile, ControlSample, z_bin_edges, z_bin_index

MAGIC = b"RMST"
FORMAT_VERSION = 1


class DegenerateHull(ValueError):
    """Hull too thin around its centroid to stretch stably."""


class VersionMismatch(ValueError):
    """Serialized artifact written by an incompatible format version."""


@dataclass(frozen=True)
class RemapGrid:
    """Per-cell remapped outputs plus diagnostics for one twist bin.

    Arrays are float32, shape (m_y, m_x), indexed [iy, ix]; cell (ix, iy) is
    centered at (-1 + (ix + 0.5) * 2 / m_x, -1 + (iy + 0.5) * 2 / m_y).
    """

    out_x: np.ndarray
    out_y: np.ndarray
    rho: np.ndarray
    level: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.out_x.shape


@dataclass(frozen=True)
class ZMap:
    """Monotone piecewise-linear stretch of the retained twist range onto [-1, 1]."""

    z_min: float
    z_max: float
    enabled: bool = True

    def apply(self, z: float) -> float:
        z = min(1.0, max(-1.0, z))
        if not self.enabled or self.z_max - self.z_min < 1e-9:
            return z
        out = -1.0 + 2.0 * (z - self.z_min) / (self.z_max - self.z_min)
        return min(1.0, max(-1.0, out))


@dataclass
class BinReport:
    bin_index: int
    rho_min: float
    rho_mean: float
    rho_max: float
    borrowed_from: int | None


@dataclass
class CompileReport:
    bins: list[BinReport] = field(default_factory=list)
    seconds: float = 0.0


@dataclass(frozen=True)
class RemapStack:
    """The compiled map: one grid per twist bin plus the twist stretch."""

    grids: tuple[RemapGrid, ...]
    z_map: ZMap
    profile_hash: str
    config: dict
    report: CompileReport | None = None

    @property
    def m_z(self) -> int:
        return len(self.grids)

    def bin_index(self, z: float) -> int:
        return z_bin_index(z, self.m_z)

    def select_bin(self, z: float, current: int | None, hysteresis: float = 0.02) -> int:
        """Grid choice with an anti-chatter band around the current bin."""
        nominal = self.bin_index(z)
        if current is None or nominal == current:
            return nominal
        lo, hi = z_bin_edges(current, self.m_z)
        if lo - hysteresis <= z <= hi + hysteresis:
            return current
        return nominal


def compile_grid(hull, config: Config | None = None) -> RemapGrid:
    """Realize the radial stretch for one hull as an m_x by m_y lookup grid.

    For a cell center p with direction theta from the hull centroid, the
    output points along theta from the origin with magnitude
    min(1, |p - c| / d_hull(theta)) * d_full(theta); cells beyond the hull
    saturate onto the full-space boundary. Ray distances are exact
    intersections, so a full-coverage hull compiles to the identity map up to
    grid resolution.
    """
    config = config or Config()
    c = hull.centroid
    min_d = hull.min_boundary_distance(c)
    if min_d < 2.0 * config.cell_width:
        raise DegenerateHull(
            f"hull extends only {min_d:.4f} from its centroid; need {2 * config.cell_width:.4f}"
        )

    X, Y = cell_centers(config.m_x, config.m_y)
    dx, dy = X - c.x, Y - c.y
    r = np.hypot(dx, dy)
    safe_r = np.where(r < 1e-12, 1.0, r)
    ux, uy = dx / safe_r, dy / safe_r

    d_hull = hull_distances(hull, c, ux, uy)
    d_full = box_distances(c, ux, uy)
    ratio = np.minimum(1.0, r / d_hull)
    mag = ratio * d_full
    out_x = np.clip(np.where(r < 1e-12, 0.0, mag * ux), -1.0, 1.0)
    out_y = np.clip(np.where(r < 1e-12, 0.0, mag * uy), -1.0, 1.0)
    rho = np.clip(d_hull / d_full, 0.0, 1.0)

    levels = partition_level_sets(
        hull, (config.m_x, config.m_y), config.n_levels, c
    ).cell_level

    return RemapGrid(
        out_x=out_x.astype(np.float32),
        out_y=out_y.astype(np.float32),
        rho=rho.astype(np.float32),
        level=levels.astype(np.float32),
    )


def compile_stack(profile: BiasProfile, config: Config | None = None) -> RemapStack:
    """Compile one grid per twist bin; borrowed bins reuse their donor's grid."""
    config = config or Config()
    started = time.perf_counter()
    compiled: dict[int, RemapGrid] = {}
    grids: list[RemapGrid] = []
    report = CompileReport()
    for b in profile.bins:
        source = b.borrowed_from if b.borrowed_from is not None else b.index
        if source not in compiled:
            donor = profile.bins[source]
            try:
                compiled[source] = compile_grid(donor.hull, config)
            except DegenerateHull as err:
                raise DegenerateHull(f"bin {source}: {err}") from err
        grid = compiled[source]
        grids.append(grid)
        interior = grid.rho[grid.level >= 0]
        report.bins.append(
            BinReport(
                bin_index=b.index,
                rho_min=float(interior.min()) if interior.size else 0.0,
                rho_mean=float(interior.mean()) if interior.size else 0.0,
                rho_max=float(interior.max()) if interior.size else 0.0,
                borrowed_from=b.borrowed_from,
            )
        )
    z_map = ZMap(profile.z_range[0], profile.z_range[1], enabled=config.z_stretch)
    report.seconds = time.perf_counter() - started
    return RemapStack(
        grids=tuple(grids),
        z_map=z_map,
        profile_hash=profile.hash(),
        config=config.to_dict(),
        report=report,
    )


def lookup(
    stack: RemapStack, u: ControlSample | tuple[float, float, float], bin_override: int | None = None
) -> tuple[float, float, float]:
    """Remap one sample: bilinear in the bin's grid, twist through the z map.

    Total over the input cube and allocation-free; the deployment loop calls
    this once per frame.
    """
    if isinstance(u, ControlSample):
        x, y, z = u.x, u.y, u.z
    else:
        x, y, z = u
    x = -1.0 if x < -1.0 else (1.0 if x > 1.0 else x)
    y = -1.0 if y < -1.0 else (1.0 if y > 1.0 else y)
    z = -1.0 if z < -1.0 else (1.0 if z > 1.0 else z)
    grid = stack.grids[bin_override if bin_override is not None else stack.bin_index(z)]
    m_y, m_x = grid.shape

    gx = (x + 1.0) * 0.5 * m_x - 0.5
    gy = (y + 1.0) * 0.5 * m_y - 0.5
    if gx < 0.0:
        gx = 0.0
    elif gx > m_x - 1.0:
        gx = m_x - 1.0
    if gy < 0.0:
        gy = 0.0
    elif gy > m_y - 1.0:
        gy = m_y - 1.0
    ix0 = int(gx)
    iy0 = int(gy)
    ix1 = ix0 + 1 if ix0 < m_x - 1 else ix0
    iy1 = iy0 + 1 if iy0 < m_y - 1 else iy0
    fx = gx - ix0
    fy = gy - iy0
    ox = grid.out_x
    oy = grid.out_y
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    # float() before arithmetic keeps the math in float64 (scalar f32 would
    # otherwise win the promotion) and matches lookup_many bit for bit
    out_x = (
        w00 * float(ox[iy0, ix0])
        + w10 * float(ox[iy0, ix1])
        + w01 * float(ox[iy1, ix0])
        + w11 * float(ox[iy1, ix1])
    )
    out_y = (
        w00 * float(oy[iy0, ix0])
        + w10 * float(oy[iy0, ix1])
        + w01 * float(oy[iy1, ix0])
        + w11 * float(oy[iy1, ix1])
    )
    out_x = -1.0 if out_x < -1.0 else (1.0 if out_x > 1.0 else out_x)
    out_y = -1.0 if out_y < -1.0 else (1.0 if out_y > 1.0 else out_y)
    return out_x, out_y, stack.z_map.apply(z)


def lookup_many(
    stack: RemapStack, xs: np.ndarray, ys: np.ndarray, zs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized lookup for analysis and plotting; semantics match lookup()."""
    xs = np.clip(np.asarray(xs, dtype=float), -1.0, 1.0)
    ys = np.clip(np.asarray(ys, dtype=float), -1.0, 1.0)
    zs = np.clip(np.asarray(zs, dtype=float), -1.0, 1.0)
    out_x = np.empty_like(xs)
    out_y = np.empty_like(ys)
    bins = np.minimum(stack.m_z - 1, np.maximum(0, ((zs + 1.0) / 2.0 * stack.m_z).astype(int)))
    for b in np.unique(bins):
        mask = bins == b
        grid = stack.grids[b]
        m_y, m_x = grid.shape
        gx = np.clip((xs[mask] + 1.0) * 0.5 * m_x - 0.5, 0.0, m_x - 1.0)
        gy = np.clip((ys[mask] + 1.0) * 0.5 * m_y - 0.5, 0.0, m_y - 1.0)
        ix0 = gx.astype(int)
        iy0 = gy.astype(int)
        ix1 = np.minimum(ix0 + 1, m_x - 1)
        iy1 = np.minimum(iy0 + 1, m_y - 1)
        fx = gx - ix0
        fy = gy - iy0
        ox, oy = grid.out_x, grid.out_y
        w00 = (1 - fx) * (1 - fy)
        w10 = fx * (1 - fy)
        w01 = (1 - fx) * fy
        w11 = fx * fy
        out_x[mask] = (
            w00 * ox[iy0, ix0] + w10 * ox[iy0, ix1] + w01 * ox[iy1, ix0] + w11 * ox[iy1, ix1]
        )
        out_y[mask] = (
            w00 * oy[iy0, ix0] + w10 * oy[iy0, ix1] + w01 * oy[iy1, ix0] + w11 * oy[iy1, ix1]
        )
    if stack.z_map.enabled and stack.z_map.z_max - stack.z_map.z_min >= 1e-9:
        out_z = -1.0 + 2.0 * (zs - stack.z_map.z_min) / (stack.z_map.z_max - stack.z_map.z_min)
    else:
        out_z = zs.copy()
    return np.clip(out_x, -1, 1), np.clip(out_y, -1, 1), np.clip(out_z, -1, 1)


_HEADER = struct.Struct("<4sIIII32s")


def save_stack(stack: RemapStack, path: str | Path) -> None:
    """Write <path> (binary grids) and the <path>.json sidecar."""
    path = Path(path)
    grid0 = stack.grids[0]
    m_y, m_x = grid0.shape
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MAGIC, FORMAT_VERSION, m_x, m_y, stack.m_z, bytes.fromhex(stack.profile_hash)
            )
        )
        for grid in stack.grids:
            for arr in (grid.out_x, grid.out_y, grid.rho, grid.level):
                fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    sidecar = {
        "version": FORMAT_VERSION,
        "profile_hash": stack.profile_hash,
        "z_map": {"z_min": stack.z_map.z_min, "z_max": stack.z_map.z_max, "enabled": stack.z_map.enabled},
        "config": stack.config,
        "rho_stats": [
            {
                "bin": b.bin_index,
                "rho_min": b.rho_min,
                "rho_mean": b.rho_mean,
                "rho_max": b.rho_max,
                "borrowed_from": b.borrowed_from,
            }
            for b in (stack.report.bins if stack.report else [])
        ],
    }
    with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_stack(path: str | Path) -> RemapStack:
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise VersionMismatch("truncated stack header")
        magic, version, m_x, m_y, m_z, hash_raw = _HEADER.unpack(header)
        if magic != MAGIC:
            raise VersionMismatch(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"unsupported stack version {version}")
        grids = []
        n = m_x * m_y
        for _ in range(m_z):
            arrays = []
            for _ in range(4):
                buf = fh.read(4 * n)
                if len(buf) < 4 * n:
                    raise VersionMismatch("truncated stack body")
                arrays.append(np.frombuffer(buf, dtype="<f4").reshape(m_y, m_x).copy())
            grids.append(RemapGrid(*arrays))
    sidecar_path = path.with_suffix(path.suffix + ".json")
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    zm = sidecar["z_map"]
    return RemapStack(
        grids=tuple(grids),
        z_map=ZMap(zm["z_min"], zm["z_max"], zm["enabled"]),
        profile_hash=hash_raw.hex(),
        config=sidecar.get("config", {}),
    )

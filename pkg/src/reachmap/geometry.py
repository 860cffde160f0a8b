"""Planar geometry kernel: weighted convex hulls, ray casting, level sets.

Everything operates on the unit control square [-1, 1] x [-1, 1]. Hulls are
strictly convex CCW polygons; collinear boundary points are dropped so the
vertex set is exactly the set of extreme points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence

import numpy as np

EDGE_TOL = 1e-9  # tolerance for on-edge membership tests


class DegenerateInput(ValueError):
    """Fewer than 3 points, or all points collinear."""


class NoBoundaryHit(RuntimeError):
    """Ray marching exhausted its step budget without leaving the region."""


class Point2(NamedTuple):
    x: float
    y: float


def _cross(o: Point2, a: Point2, b: Point2) -> float:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


class Region(Protocol):
    """Bounded planar region queried by membership."""

    def contains(self, p: Point2) -> bool: ...

    @property
    def diameter(self) -> float: ...


@dataclass(frozen=True)
class Box:
    """Axis-aligned square centered on the origin; the full control space."""

    half_extent: float = 1.0

    def contains(self, p: Point2) -> bool:
        return abs(p.x) <= self.half_extent + EDGE_TOL and abs(p.y) <= self.half_extent + EDGE_TOL

    @property
    def diameter(self) -> float:
        return 2.0 * math.sqrt(2.0) * self.half_extent

    def boundary_distance(self, origin: Point2, theta: float) -> float:
        """Exact distance from an interior origin to the square boundary."""
        ux, uy = math.cos(theta), math.sin(theta)
        best = math.inf
        if ux > 1e-15:
            best = min(best, (self.half_extent - origin.x) / ux)
        elif ux < -1e-15:
            best = min(best, (-self.half_extent - origin.x) / ux)
        if uy > 1e-15:
            best = min(best, (self.half_extent - origin.y) / uy)
        elif uy < -1e-15:
            best = min(best, (-self.half_extent - origin.y) / uy)
        return best


@dataclass(frozen=True)
class Disk:
    center: Point2 = Point2(0.0, 0.0)
    radius: float = 1.0

    def contains(self, p: Point2) -> bool:
        return math.hypot(p.x - self.center.x, p.y - self.center.y) <= self.radius + EDGE_TOL

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def boundary_distance(self, origin: Point2, theta: float) -> float:
        ox, oy = origin.x - self.center.x, origin.y - self.center.y
        ux, uy = math.cos(theta), math.sin(theta)
        b = ox * ux + oy * uy
        c = ox * ox + oy * oy - self.radius * self.radius
        disc = b * b - c
        if disc < 0:
            return math.inf
        return -b + math.sqrt(disc)


@dataclass(frozen=True)
class ConvexHull:
    """Strictly convex CCW polygon with per-vertex sample weights."""

    vertices: tuple[Point2, ...]
    simplices: tuple[tuple[int, int], ...]
    vertex_weights: tuple[int, ...]
    centroid: Point2

    def contains(self, p: Point2, tol: float = EDGE_TOL) -> bool:
        """True if p is inside or within tol of an edge."""
        for i, j in self.simplices:
            if _cross(self.vertices[i], self.vertices[j], p) < -tol:
                return False
        return True

    @property
    def diameter(self) -> float:
        vs = self.vertices
        return max(
            math.hypot(a.x - b.x, a.y - b.y) for a in vs for b in vs
        )

    def boundary_distance(self, origin: Point2, theta: float) -> float:
        """Exact distance from an interior origin to the polygon boundary."""
        ux, uy = math.cos(theta), math.sin(theta)
        best = math.inf
        for i, j in self.simplices:
            t = _ray_segment(origin.x, origin.y, ux, uy, self.vertices[i], self.vertices[j])
            if t is not None and t < best:
                best = t
        return best

    def min_boundary_distance(self, origin: Point2) -> float:
        """Shortest distance from origin to any edge (hull thinness check)."""
        best = math.inf
        for i, j in self.simplices:
            a, b = self.vertices[i], self.vertices[j]
            abx, aby = b.x - a.x, b.y - a.y
            denom = abx * abx + aby * aby
            s = ((origin.x - a.x) * abx + (origin.y - a.y) * aby) / denom
            s = min(1.0, max(0.0, s))
            best = min(best, math.hypot(a.x + s * abx - origin.x, a.y + s * aby - origin.y))
        return best

    def area(self) -> float:
        acc = 0.0
        vs = self.vertices
        for i in range(len(vs)):
            a, b = vs[i], vs[(i + 1) % len(vs)]
            acc += a.x * b.y - b.x * a.y
        return 0.5 * acc


def _ray_segment(ox, oy, ux, uy, a: Point2, b: Point2):
    """Parameter t >= 0 where origin + t*(ux,uy) crosses segment ab, else None."""
    sx, sy = b.x - a.x, b.y - a.y
    denom = ux * sy - uy * sx
    if abs(denom) < 1e-15:
        return None
    qx, qy = a.x - ox, a.y - oy
    t = (qx * sy - qy * sx) / denom
    s = (qx * uy - qy * ux) / denom
    if t >= -EDGE_TOL and -1e-12 <= s <= 1.0 + 1e-12:
        return max(t, 0.0)
    return None


def convex_hull(points: Sequence[Point2], weights_radius: float = 0.025) -> ConvexHull:
    """Monotone-chain hull of the points, with collinear boundary points dropped.

    vertex_weights[i] counts the input points within weights_radius of vertex i;
    the centroid is the polygon's area centroid (guaranteed interior), not the
    sample center of mass.
    """
    pts = [Point2(float(p[0]), float(p[1])) for p in points]
    if len(pts) < 3:
        raise DegenerateInput(f"need at least 3 points, got {len(pts)}")
    uniq = sorted(set(pts))
    if len(uniq) < 3:
        raise DegenerateInput("fewer than 3 distinct points")

    def half(seq):
        chain: list[Point2] = []
        for p in seq:
            while len(chain) > 1 and _cross(chain[-2], chain[-1], p) <= 0.0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(uniq)
    upper = half(reversed(uniq))
    ring = lower[:-1] + upper[:-1]  # CCW
    if len(ring) < 3:
        raise DegenerateInput("all points collinear")

    verts = tuple(ring)
    simplices = tuple((i, (i + 1) % len(verts)) for i in range(len(verts)))

    r2 = weights_radius * weights_radius
    weights = tuple(
        sum(1 for p in pts if (p.x - v.x) ** 2 + (p.y - v.y) ** 2 <= r2)
        for v in verts
    )

    # area centroid of the polygon
    a_acc = cx_acc = cy_acc = 0.0
    for i in range(len(verts)):
        p, q = verts[i], verts[(i + 1) % len(verts)]
        w = p.x * q.y - q.x * p.y
        a_acc += w
        cx_acc += (p.x + q.x) * w
        cy_acc += (p.y + q.y) * w
    area = 0.5 * a_acc
    centroid = Point2(cx_acc / (6.0 * area), cy_acc / (6.0 * area))

    return ConvexHull(verts, simplices, weights, centroid)


def ray_to_boundary(origin: Point2, theta: float, boundary: Region, eta: float) -> Point2:
    """First point at or beyond the region boundary along theta from origin.

    Marches in steps of eta, then bisects the bracketing interval down to
    eta/100. Works for any Region; analytic shortcuts live on the concrete
    region types.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not boundary.contains(origin):
        raise ValueError("origin must be inside the boundary region")
    ux, uy = math.cos(theta), math.sin(theta)
    max_steps = int(math.ceil(10.0 * boundary.diameter / eta))
    lo = 0.0
    hi = None
    for step in range(1, max_steps + 1):
        t = step * eta
        if boundary.contains(Point2(origin.x + t * ux, origin.y + t * uy)):
            lo = t
        else:
            hi = t
            break
    if hi is None:
        raise NoBoundaryHit(f"no boundary within {max_steps} steps of {eta}")
    target = eta / 100.0
    while hi - lo > target:
        mid = 0.5 * (lo + hi)
        if boundary.contains(Point2(origin.x + mid * ux, origin.y + mid * uy)):
            lo = mid
        else:
            hi = mid
    return Point2(origin.x + hi * ux, origin.y + hi * uy)


def boundary_distance(region: Region, origin: Point2, theta: float, eta: float = 0.5) -> float:
    """Distance from origin to the region boundary along theta.

    Uses the region's closed form when it has one, marching otherwise.
    """
    exact = getattr(region, "boundary_distance", None)
    if exact is not None:
        return exact(origin, theta)
    hit = ray_to_boundary(origin, theta, region, eta)
    return math.hypot(hit.x - origin.x, hit.y - origin.y)


EXTERIOR = -1


@dataclass(frozen=True)
class LevelSetPartition:
    """Radial level indices over an m_x x m_y cell grid spanning the unit square.

    cell_level[iy, ix] is the level of the cell, or EXTERIOR for cells whose
    center falls outside the region.
    """

    n_levels: int
    cell_level: np.ndarray  # int16, shape (m_y, m_x)
    source: str             # "full-space" | "hull"
    center: Point2

    def level_at(self, p: Point2) -> int:
        m_y, m_x = self.cell_level.shape
        ix = min(m_x - 1, max(0, int((p.x + 1.0) / 2.0 * m_x)))
        iy = min(m_y - 1, max(0, int((p.y + 1.0) / 2.0 * m_y)))
        return int(self.cell_level[iy, ix])


def cell_centers(m_x: int, m_y: int) -> tuple[np.ndarray, np.ndarray]:
    """Meshgrid of cell-center coordinates over the unit square, shape (m_y, m_x)."""
    xs = -1.0 + (np.arange(m_x) + 0.5) * 2.0 / m_x
    ys = -1.0 + (np.arange(m_y) + 0.5) * 2.0 / m_y
    return np.meshgrid(xs, ys)


def region_coverage(
    region: Region, center: Point2, m_x: int, m_y: int, eta: float = 0.5
) -> tuple[np.ndarray, np.ndarray]:
    """(inside mask, radial coverage fraction rho) per grid cell center.

    rho = distance from center to the cell center, over distance from center to
    the region boundary along that same direction.
    """
    X, Y = cell_centers(m_x, m_y)
    dx, dy = X - center.x, Y - center.y
    r = np.hypot(dx, dy)
    safe_r = np.where(r < 1e-12, 1.0, r)
    ux, uy = dx / safe_r, dy / safe_r

    if isinstance(region, ConvexHull):
        d = hull_distances(region, center, ux, uy)
        inside = np.ones_like(r, dtype=bool)
        for i, j in region.simplices:
            a, b = region.vertices[i], region.vertices[j]
            inside &= (b.x - a.x) * (Y - a.y) - (b.y - a.y) * (X - a.x) >= -EDGE_TOL
    elif isinstance(region, Box):
        d = box_distances(center, ux, uy, region.half_extent)
        inside = (np.abs(X) <= region.half_extent + EDGE_TOL) & (np.abs(Y) <= region.half_extent + EDGE_TOL)
    elif isinstance(region, Disk):
        b = (center.x - region.center.x) * ux + (center.y - region.center.y) * uy
        c = (center.x - region.center.x) ** 2 + (center.y - region.center.y) ** 2 - region.radius**2
        d = -b + np.sqrt(np.maximum(b * b - c, 0.0))
        inside = np.hypot(X - region.center.x, Y - region.center.y) <= region.radius + EDGE_TOL
    else:
        d = np.empty_like(r)
        inside = np.empty_like(r, dtype=bool)
        for iy in range(m_y):
            for ix in range(m_x):
                p = Point2(float(X[iy, ix]), float(Y[iy, ix]))
                inside[iy, ix] = region.contains(p)
                theta = math.atan2(p.y - center.y, p.x - center.x)
                d[iy, ix] = boundary_distance(region, center, theta, eta) if inside[iy, ix] else np.nan

    rho = np.where((r < 1e-12) | ~np.isfinite(d) | (d <= 0), 0.0, r / np.where(d > 0, d, 1.0))
    return inside, rho


def _enforce_radial_monotone(levels: np.ndarray, center: Point2) -> None:
    """Raise each cell to at least its center-facing neighbors' levels.

    Cell-quantized floor(rho) can dip by one level along rays that clip cells
    whose centers sit slightly off-ray; any outward ray crosses a center-facing
    edge of each new cell, so this sweep makes level sequences non-decreasing
    along every ray.
    """
    m_y, m_x = levels.shape
    fx = (center.x + 1.0) / 2.0 * m_x - 0.5
    fy = (center.y + 1.0) / 2.0 * m_y - 0.5
    ixs = np.arange(m_x) - fx
    iys = np.arange(m_y) - fy
    order = np.argsort((np.abs(ixs)[None, :] + np.abs(iys)[:, None]).ravel(), kind="stable")
    for flat in order:
        iy, ix = divmod(int(flat), m_x)
        if levels[iy, ix] == EXTERIOR:
            continue
        best = levels[iy, ix]
        sx = 1 if ixs[ix] > 0.5 else (-1 if ixs[ix] < -0.5 else 0)
        sy = 1 if iys[iy] > 0.5 else (-1 if iys[iy] < -0.5 else 0)
        if sx and levels[iy, ix - sx] != EXTERIOR:
            best = max(best, levels[iy, ix - sx])
        if sy and levels[iy - sy, ix] != EXTERIOR:
            best = max(best, levels[iy - sy, ix])
        levels[iy, ix] = best


def partition_level_sets(
    region: Region,
    grid: tuple[int, int],
    n_levels: int,
    center: Point2,
    eta: float = 0.5,
) -> LevelSetPartition:
    """Assign each in-region grid cell a level by its radial coverage fraction.

    A cell at fraction rho of the way from center to the boundary (along the
    cell's own direction) gets floor(n_levels * rho), clamped to n_levels - 1,
    then lifted where needed so levels never decrease along outward rays.
    """
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    if not region.contains(center):
        raise ValueError("center must lie inside the region")
    m_x, m_y = grid
    inside, rho = region_coverage(region, center, m_x, m_y, eta)
    levels = np.where(
        inside, np.minimum(n_levels - 1, (n_levels * rho).astype(np.int16)), EXTERIOR
    ).astype(np.int16)
    _enforce_radial_monotone(levels, center)
    source = "hull" if isinstance(region, ConvexHull) else "full-space"
    return LevelSetPartition(n_levels, levels, source, center)


# Vectorized boundary distances, used by the map compiler.

def box_distances(origin: Point2, ux: np.ndarray, uy: np.ndarray, half_extent: float = 1.0) -> np.ndarray:
    """Distance from origin to the square boundary along each unit direction."""
    with np.errstate(divide="ignore"):
        tx = np.where(
            ux > 0, (half_extent - origin.x) / ux,
            np.where(ux < 0, (-half_extent - origin.x) / ux, np.inf),
        )
        ty = np.where(
            uy > 0, (half_extent - origin.y) / uy,
            np.where(uy < 0, (-half_extent - origin.y) / uy, np.inf),
        )
    return np.minimum(tx, ty)


def hull_distances(hull: ConvexHull, origin: Point2, ux: np.ndarray, uy: np.ndarray) -> np.ndarray:
    """Distance from an interior origin to the hull boundary along each direction."""
    best = np.full(ux.shape, np.inf)
    for i, j in hull.simplices:
        a, b = hull.vertices[i], hull.vertices[j]
        sx, sy = b.x - a.x, b.y - a.y
        qx, qy = a.x - origin.x, a.y - origin.y
        denom = ux * sy - uy * sx
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (qx * sy - qy * sx) / denom
            s = (qx * uy - qy * ux) / denom
        valid = (np.abs(denom) > 1e-15) & (t >= -EDGE_TOL) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
        best = np.where(valid & (t < best), np.maximum(t, 0.0), best)
    return best

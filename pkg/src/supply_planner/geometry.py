"""Placement regions on the flight plane, rasterized on the grid lattice.

A group's region is the set of lattice points the access point may
occupy without dropping any member below its target MCS step: the
intersection of per-member discs of radius sqrt(max_link_distance^2 -
altitude^2) around each member's planar position.  Regions share the
candidate grid's lattice (origin and step) but are not clipped to its
bounds, since nothing stops the aircraft from flying past the last
candidate.

Regions claimed by earlier groups are subtracted from later ones so
trajectories can never cross.  Each region knows its centroid, its
boundary cells (4-neighbor rule), and a snapped hover point for shapes
whose centroid falls outside the cells.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from supply_planner.errors import DomainError, EmptyRegionError
from supply_planner.grouping import CandidateGrid, GroundUser
from supply_planner.rf_link import LinkBudget, McsTable, max_distance_for_rate

Point = tuple[float, float]
Cell = tuple[int, int]


@dataclass(frozen=True, eq=False)
class Region:
    """Lattice cells where one access point may fly.

    Cells are stored as a boolean mask indexed [ix, iy]; offset is the
    lattice index of mask[0, 0], and a lattice index (i, j) maps to the
    plane point (origin + step * (i, j)).
    """

    group_id: int
    altitude: float
    step: float
    origin: Point
    offset: Cell
    mask: np.ndarray
    cell_count: int
    centroid: Point
    perimeter: tuple[Point, ...]

    @cached_property
    def cells(self) -> frozenset[Cell]:
        """Member lattice indices (i, j)."""
        idx = np.argwhere(self.mask)
        return frozenset(
            (int(i) + self.offset[0], int(j) + self.offset[1]) for i, j in idx
        )

    @cached_property
    def hover_point(self) -> Point:
        """The centroid, snapped to the nearest member cell when the
        centroid's own cell is not part of the region (ring shapes)."""
        if self.contains_xy(*self.centroid):
            return self.centroid
        idx = np.argwhere(self.mask)
        xs = self.origin[0] + self.step * (idx[:, 0] + self.offset[0])
        ys = self.origin[1] + self.step * (idx[:, 1] + self.offset[1])
        d2 = (xs - self.centroid[0]) ** 2 + (ys - self.centroid[1]) ** 2
        best = np.lexsort((ys, xs, d2))[0]
        return (float(xs[best]), float(ys[best]))

    def contains_xy(self, x: float, y: float) -> bool:
        """Nearest-cell membership test for a continuous point."""
        i = int(math.floor((x - self.origin[0]) / self.step + 0.5)) - self.offset[0]
        j = int(math.floor((y - self.origin[1]) / self.step + 0.5)) - self.offset[1]
        if 0 <= i < self.mask.shape[0] and 0 <= j < self.mask.shape[1]:
            return bool(self.mask[i, j])
        return False

    def contains_points(self, points: np.ndarray) -> bool:
        """Whether every row of an (n, 2) array passes contains_xy."""
        i = np.floor((points[:, 0] - self.origin[0]) / self.step + 0.5).astype(int)
        j = np.floor((points[:, 1] - self.origin[1]) / self.step + 0.5).astype(int)
        i -= self.offset[0]
        j -= self.offset[1]
        inside = (
            (i >= 0)
            & (i < self.mask.shape[0])
            & (j >= 0)
            & (j < self.mask.shape[1])
        )
        if not inside.all():
            return False
        return bool(self.mask[i, j].all())

    def cell_indices(self) -> np.ndarray:
        """(n, 2) int array of member lattice indices, lexicographic order."""
        return np.argwhere(self.mask) + np.asarray(self.offset)

    def cell_points(self) -> np.ndarray:
        """(n, 2) array of member cell coordinates, lexicographic order."""
        idx = np.argwhere(self.mask)
        return np.column_stack(
            (
                self.origin[0] + self.step * (idx[:, 0] + self.offset[0]),
                self.origin[1] + self.step * (idx[:, 1] + self.offset[1]),
            )
        )

    def to_csv(self, path: str) -> None:
        """Dump cells as x,y,on_perimeter rows for plotting or debugging."""
        boundary = set(self.perimeter)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("x", "y", "on_perimeter"))
            for x, y in self.cell_points():
                writer.writerow((repr(float(x)), repr(float(y)), int((x, y) in boundary)))


@dataclass(frozen=True)
class FarthestPair:
    """The two maximally separated perimeter points, a <= b lexicographically."""

    a: Point
    b: Point
    distance: float


def _build_region(
    group_id: int,
    mask: np.ndarray,
    offset: Cell,
    origin: Point,
    step: float,
    altitude: float,
) -> Region:
    idx = np.argwhere(mask)
    if idx.size == 0:
        raise EmptyRegionError(f"group {group_id}: placement region is empty", group_id=group_id)
    # trim the mask to the tight bounding box of the surviving cells
    lo = idx.min(axis=0)
    hi = idx.max(axis=0)
    mask = mask[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1]
    offset = (offset[0] + int(lo[0]), offset[1] + int(lo[1]))
    idx = idx - lo

    xs = origin[0] + step * (idx[:, 0] + offset[0])
    ys = origin[1] + step * (idx[:, 1] + offset[1])
    centroid = (float(xs.mean()), float(ys.mean()))

    padded = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    boundary = mask & ~interior
    bidx = np.argwhere(boundary)
    perimeter = tuple(
        (
            float(origin[0] + step * (i + offset[0])),
            float(origin[1] + step * (j + offset[1])),
        )
        for i, j in bidx
    )
    return Region(
        group_id=group_id,
        altitude=altitude,
        step=step,
        origin=origin,
        offset=offset,
        mask=mask,
        cell_count=int(idx.shape[0]),
        centroid=centroid,
        perimeter=perimeter,
    )


def planar_radius_sq(max_distance: float, altitude: float) -> float:
    """Squared radius of a sphere's slice at the flight altitude."""
    return max_distance * max_distance - altitude * altitude


def intersection_region(
    members: Sequence[GroundUser],
    budget: LinkBudget,
    mcs_table: McsTable,
    grid: CandidateGrid,
    group_id: int = 0,
) -> Region:
    """Region serving every member at fair share len(members).

    Each member contributes a disc around its planar position whose
    radius comes from inverting the link budget at the member's target
    MCS step; the region is the lattice rasterization of the discs'
    intersection.  Raises EmptyRegionError when a disc dies at this
    altitude or the discs share no lattice point.
    """
    if not members:
        raise DomainError("group must have at least one member")
    n = len(members)
    discs = []
    for gu in members:
        dist = max_distance_for_rate(budget, mcs_table, gu.offered_load, n)
        r_sq = planar_radius_sq(dist, grid.altitude)
        if r_sq < 0:
            raise EmptyRegionError(
                f"group {group_id}: link ceiling {dist:.2f} m is below the "
                f"flight altitude {grid.altitude:g} m for load {gu.offered_load:g}",
                group_id=group_id,
            )
        discs.append((gu.x, gu.y, r_sq))

    ox, oy = grid.origin
    step = grid.step
    # Candidate positions live on the grid, so the region does too: the
    # disc intersection is clipped to the grid's lattice.
    lo_i = max(0, *(math.ceil((x - math.sqrt(r) - ox) / step) for x, _, r in discs))
    hi_i = min(grid.nx - 1, *(math.floor((x + math.sqrt(r) - ox) / step) for x, _, r in discs))
    lo_j = max(0, *(math.ceil((y - math.sqrt(r) - oy) / step) for _, y, r in discs))
    hi_j = min(grid.ny - 1, *(math.floor((y + math.sqrt(r) - oy) / step) for _, y, r in discs))
    if hi_i < lo_i or hi_j < lo_j:
        raise EmptyRegionError(
            f"group {group_id}: member discs do not overlap inside the grid",
            group_id=group_id,
        )
    xs = ox + step * np.arange(lo_i, hi_i + 1)
    ys = oy + step * np.arange(lo_j, hi_j + 1)
    mask = np.ones((xs.size, ys.size), dtype=bool)
    for x, y, r_sq in discs:
        mask &= (xs[:, None] - x) ** 2 + (ys[None, :] - y) ** 2 <= r_sq
    return _build_region(group_id, mask, (lo_i, lo_j), grid.origin, step, grid.altitude)


def remove_overlap(region: Region, previously_assigned: Iterable[Cell]) -> Region:
    """Drop cells already claimed by earlier groups and rebuild.

    previously_assigned holds lattice indices (i, j), as a set or an
    (n, 2) int array.  Raises EmptyRegionError when nothing survives;
    the caller decides on the fallback.
    """
    if isinstance(previously_assigned, np.ndarray):
        claimed = previously_assigned.reshape(-1, 2)
    else:
        claimed = np.asarray(sorted(previously_assigned), dtype=int).reshape(-1, 2)
    if claimed.shape[0] == 0:
        return region
    mask = region.mask.copy()
    ci = claimed[:, 0] - region.offset[0]
    cj = claimed[:, 1] - region.offset[1]
    hit = (ci >= 0) & (ci < mask.shape[0]) & (cj >= 0) & (cj < mask.shape[1])
    mask[ci[hit], cj[hit]] = False
    if int(mask.sum()) == region.cell_count:
        return region
    return _build_region(
        region.group_id, mask, region.offset, region.origin, region.step, region.altitude
    )


def centroid_and_perimeter(region: Region) -> tuple[Point, tuple[Point, ...]]:
    """The region's mean cell coordinate and its boundary cells.

    A cell is boundary iff one of its 4-neighbors is not in the region;
    the perimeter is ordered lexicographically by (x, y).
    """
    if region.cell_count == 0:
        raise DomainError("empty region")
    return region.centroid, region.perimeter


def farthest_pair(perimeter: Sequence[Point]) -> FarthestPair:
    """Maximally separated pair among the given points.

    Exhaustive O(n^2) scan, chunked to bound memory; ties resolved to
    the lexicographically smallest (a, b) pair with a <= b.
    """
    if len(perimeter) < 2:
        raise DomainError(f"need at least 2 perimeter points, got {len(perimeter)}")
    pts = np.asarray(perimeter, dtype=float)
    n = pts.shape[0]
    best_d2 = -1.0
    chunk = max(1, 2_000_000 // n)
    for start in range(0, n, chunk):
        block = pts[start : start + chunk]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        m = float(d2.max())
        if m > best_d2:
            best_d2 = m
    best: tuple[Point, Point] | None = None
    for start in range(0, n, chunk):
        block = pts[start : start + chunk]
        d2 = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        for bi, j in np.argwhere(d2 == best_d2):
            a = (float(pts[start + bi, 0]), float(pts[start + bi, 1]))
            b = (float(pts[j, 0]), float(pts[j, 1]))
            if a > b:
                a, b = b, a
            if best is None or (a, b) < best:
                best = (a, b)
    assert best is not None
    return FarthestPair(best[0], best[1], math.sqrt(best_d2))


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    """Distance from p to the segment a-b."""
    return float(
        points_segment_distance(np.asarray([p], dtype=float), a, b)[0]
    )


def points_segment_distance(points: np.ndarray, a: Point, b: Point) -> np.ndarray:
    """Distance from each row of an (n, 2) array to the segment a-b."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    ab = bv - av
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(points[:, 0] - av[0], points[:, 1] - av[1])
    t = ((points - av) @ ab) / denom
    t = np.clip(t, 0.0, 1.0)
    proj = av + t[:, None] * ab
    return np.hypot(points[:, 0] - proj[:, 0], points[:, 1] - proj[:, 1])


def chord_clearance(
    perimeter: Sequence[Point], a: Point, b: Point
) -> float | None:
    """Smallest distance from the chord a-b to any other perimeter point.

    Excludes the exact endpoints; returns None when no other point
    exists (degenerate two-point perimeters).
    """
    others = np.asarray([p for p in perimeter if p != a and p != b], dtype=float)
    if others.size == 0:
        return None
    return float(points_segment_distance(others, a, b).min())

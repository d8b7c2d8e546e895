"""Closed-loop trajectories inside a placement region.

Three shapes are attempted inside every region, all flown at the
per-segment optimal speed:

  * circular: centered on the region's hover point with radius R_c,
    the smallest distance from that center to the region's boundary;
  * inner elliptic: a stadium inscribed in the circular path, oriented
    along the region's farthest-pair axis, with semicircle radius
    0.3 * R_c and its extreme points touching the circle;
  * elliptic: a stadium spanning the farthest-pair chord, semicircle
    radius equal to the chord's clearance to the rest of the boundary,
    so its apexes sit exactly on the farthest pair.

A shape whose turn radius falls below one grid step or whose sampled
waypoints leave the region is discarded; hovering at the (snapped)
centroid is always available.  The cheapest energy-per-hour wins, with
ties going to the simpler shape (hover, circular, inner elliptic,
elliptic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from supply_planner.energy import (
    STRAIGHT,
    EnergyParams,
    hover_energy_per_hour,
    hover_power,
    optimal_speed,
)
from supply_planner.errors import InfeasibleError, QosViolationError
from supply_planner.geometry import (
    Region,
    chord_clearance,
    farthest_pair,
)
from supply_planner.grouping import GroundUser
from supply_planner.rf_link import (
    LinkBudget,
    McsTable,
    snr,
    target_entry_for_rate,
)

HOVER = "hover"
CIRCULAR = "circular"
INNER_ELLIPTIC = "inner_elliptic"
ELLIPTIC = "elliptic"

# selection order on exact energy ties: simpler shapes first
KIND_ORDER = (HOVER, CIRCULAR, INNER_ELLIPTIC, ELLIPTIC)

INNER_RADIUS_FRACTION = 0.3

_MAX_WAYPOINT_SPACING = 1.0  # m of arc between consecutive polyline samples
_MIN_ARC_SAMPLES = 48  # per semicircle, keeps chord-length sums within 0.1%


@dataclass(frozen=True)
class Trajectory:
    """One closed loop (or hover point) with its energy cost.

    segments are (length m, turn_radius m-or-STRAIGHT) pairs matching
    the polyline's construction order; speeds and segment_powers are
    per segment.  Hover has no segments and a single-point polyline.
    """

    kind: str
    center: tuple[float, float]
    altitude: float
    orientation: float
    segments: tuple[tuple[float, float], ...]
    polyline: tuple[tuple[float, float], ...]
    speeds: tuple[float, ...]
    segment_powers: tuple[float, ...]
    mean_power: float
    energy_per_hour: float
    lap_time: float


@dataclass(frozen=True)
class QosReport:
    """Worst-case SNR slack of a flown plan against each member's target."""

    slacks: tuple[tuple[int, float], ...]  # (gu_id, worst slack dB)
    worst_slack: float
    ok: bool


@dataclass(frozen=True)
class FapPlan:
    """One access point's final plan: who it serves, where, and how it flies."""

    group_id: int
    members: tuple[int, ...]
    region: Region
    candidates: tuple[Trajectory, ...]
    chosen: Trajectory
    hover_baseline_energy: float
    warnings: tuple[str, ...] = ()


def _arc_points(
    center: tuple[float, float],
    radius: float,
    start_angle: float,
    sweep: float,
) -> np.ndarray:
    """Sampled open arc: includes the start point, excludes the end."""
    n = max(_MIN_ARC_SAMPLES, math.ceil(radius * abs(sweep) / _MAX_WAYPOINT_SPACING))
    angles = start_angle + sweep * np.arange(n) / n
    return np.column_stack(
        (center[0] + radius * np.cos(angles), center[1] + radius * np.sin(angles))
    )


def _line_points(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sampled open segment: includes a, excludes b."""
    n = max(1, math.ceil(float(np.hypot(*(b - a))) / _MAX_WAYPOINT_SPACING))
    t = np.arange(n) / n
    return a + t[:, None] * (b - a)


def _cost_segments(
    params: EnergyParams, segments: Sequence[tuple[float, float]]
) -> tuple[tuple[float, ...], tuple[float, ...], float, float, float] | None:
    """Optimal speeds/powers per segment; None when power caps out."""
    speeds = []
    powers = []
    lap_time = 0.0
    lap_energy = 0.0
    for length, turn_radius in segments:
        point = optimal_speed(params, turn_radius)
        if point.power > params.max_power or point.speed <= 0:
            return None
        speeds.append(point.speed)
        powers.append(point.power)
        seg_time = length / point.speed
        lap_time += seg_time
        lap_energy += point.power * seg_time
    mean_power = lap_energy / lap_time
    return tuple(speeds), tuple(powers), mean_power, mean_power * 3600.0, lap_time


def hover_trajectory(
    region: Region, params: EnergyParams, altitude: float | None = None
) -> Trajectory:
    """Stationary fallback at the region's (snapped) centroid."""
    power = hover_power(params)
    return Trajectory(
        kind=HOVER,
        center=region.hover_point,
        altitude=region.altitude if altitude is None else altitude,
        orientation=0.0,
        segments=(),
        polyline=(region.hover_point,),
        speeds=(),
        segment_powers=(),
        mean_power=power,
        energy_per_hour=hover_energy_per_hour(params),
        lap_time=0.0,
    )


def _finish_loop(
    region: Region,
    params: EnergyParams,
    kind: str,
    center: tuple[float, float],
    orientation: float,
    segments: tuple[tuple[float, float], ...],
    polyline: np.ndarray,
) -> Trajectory | None:
    if not region.contains_points(polyline):
        return None
    cost = _cost_segments(params, segments)
    if cost is None:
        return None
    speeds, powers, mean_power, energy, lap_time = cost
    closed = np.vstack((polyline, polyline[:1]))
    return Trajectory(
        kind=kind,
        center=center,
        altitude=region.altitude,
        orientation=orientation,
        segments=segments,
        polyline=tuple((float(x), float(y)) for x, y in closed),
        speeds=speeds,
        segment_powers=powers,
        mean_power=mean_power,
        energy_per_hour=energy,
        lap_time=lap_time,
    )


def circular_radius(region: Region) -> float:
    """Smallest distance from the region's hover point to its boundary."""
    pts = np.asarray(region.perimeter, dtype=float)
    cx, cy = region.hover_point
    return float(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy).min())


def circular_trajectory(region: Region, params: EnergyParams) -> Trajectory | None:
    """Circle around the hover point, radius R_c; None when too small."""
    r_c = circular_radius(region)
    if r_c < region.step:
        return None
    center = region.hover_point
    polyline = np.vstack(
        (
            _arc_points(center, r_c, 0.0, math.pi),
            _arc_points(center, r_c, math.pi, math.pi),
        )
    )
    half = math.pi * r_c
    return _finish_loop(
        region,
        params,
        CIRCULAR,
        center,
        0.0,
        ((half, r_c), (half, r_c)),
        polyline,
    )


def _axis_angle(region: Region) -> float | None:
    """Farthest-pair axis direction, normalized to [0, pi)."""
    if len(region.perimeter) < 2:
        return None
    pair = farthest_pair(region.perimeter)
    angle = math.atan2(pair.b[1] - pair.a[1], pair.b[0] - pair.a[0])
    return angle + math.pi if angle < 0 else angle


def _stadium(
    center: tuple[float, float],
    orientation: float,
    half_straight: float,
    radius: float,
) -> tuple[tuple[tuple[float, float], ...], np.ndarray]:
    """Segments and open polyline of a counter-clockwise stadium."""
    u = np.array((math.cos(orientation), math.sin(orientation)))
    v = np.array((-math.sin(orientation), math.cos(orientation)))
    c = np.asarray(center)
    m1 = c + half_straight * u
    m2 = c - half_straight * u
    polyline = np.vstack(
        (
            _line_points(m2 - radius * v, m1 - radius * v),
            _arc_points(tuple(m1), radius, orientation - math.pi / 2, math.pi),
            _line_points(m1 + radius * v, m2 + radius * v),
            _arc_points(tuple(m2), radius, orientation + math.pi / 2, math.pi),
        )
    )
    straight = 2.0 * half_straight
    half_turn = math.pi * radius
    segments = (
        (straight, STRAIGHT),
        (half_turn, radius),
        (straight, STRAIGHT),
        (half_turn, radius),
    )
    return segments, polyline


def inner_elliptic_trajectory(
    region: Region, params: EnergyParams, r_c: float | None = None
) -> Trajectory | None:
    """Stadium inscribed in the circular path, along the farthest-pair axis.

    Semicircle radius is 0.3 * R_c and the straights run so the extreme
    points touch the circle of radius R_c around the hover point.
    """
    if r_c is None:
        r_c = circular_radius(region)
    if r_c < region.step:
        return None
    r_i = INNER_RADIUS_FRACTION * r_c
    if r_i < region.step:
        return None
    orientation = _axis_angle(region)
    if orientation is None:
        return None
    segments, polyline = _stadium(region.hover_point, orientation, r_c - r_i, r_i)
    return _finish_loop(
        region, params, INNER_ELLIPTIC, region.hover_point, orientation, segments, polyline
    )


def elliptic_trajectory(region: Region, params: EnergyParams) -> Trajectory | None:
    """Stadium spanning the farthest-pair chord.

    Semicircle radius is the chord's clearance: the smallest distance
    from the chord to any other boundary point.  The apexes then land
    exactly on the farthest pair.
    """
    if len(region.perimeter) < 2:
        return None
    pair = farthest_pair(region.perimeter)
    clearance = chord_clearance(region.perimeter, pair.a, pair.b)
    if clearance is None or clearance < region.step:
        return None
    straight = pair.distance - 2.0 * clearance
    if straight <= 0:
        return None
    center = (
        (pair.a[0] + pair.b[0]) / 2.0,
        (pair.a[1] + pair.b[1]) / 2.0,
    )
    angle = math.atan2(pair.b[1] - pair.a[1], pair.b[0] - pair.a[0])
    orientation = angle + math.pi if angle < 0 else angle
    segments, polyline = _stadium(center, orientation, straight / 2.0, clearance)
    return _finish_loop(region, params, ELLIPTIC, center, orientation, segments, polyline)


def select_trajectory(
    region: Region,
    params: EnergyParams,
    candidates: Sequence[Trajectory] | None = None,
) -> tuple[Trajectory, tuple[Trajectory, ...]]:
    """All constructible trajectories for the region, and the cheapest.

    Hover is always constructible; a geometric candidate replaces it
    only by strictly lower energy per hour, so exact ties resolve in
    KIND_ORDER.
    """
    if candidates is None:
        hover = hover_trajectory(region, params)
        if hover.mean_power > params.max_power:
            raise InfeasibleError(
                f"hover power {hover.mean_power:.2f} W exceeds the aircraft "
                f"limit {params.max_power:.2f} W"
            )
        built = [
            circular_trajectory(region, params),
            inner_elliptic_trajectory(region, params),
            elliptic_trajectory(region, params),
        ]
        candidates = [hover] + [t for t in built if t is not None]
    ordered = sorted(candidates, key=lambda t: KIND_ORDER.index(t.kind))
    chosen = ordered[0]
    for t in ordered[1:]:
        if t.energy_per_hour < chosen.energy_per_hour:
            chosen = t
    return chosen, tuple(ordered)


def verify_plan_qos(
    plan: FapPlan,
    gus: Sequence[GroundUser],
    budget: LinkBudget,
    mcs_table: McsTable,
    raise_on_violation: bool = True,
) -> QosReport:
    """Re-check SNR along the flown path against every member's target.

    For each waypoint and member, the link SNR must clear the member's
    target MCS threshold plus the margin (within 1e-6 dB).  Containment
    in the region guarantees this by construction, so a violation on a
    non-fallback plan is an internal bug.
    """
    waypoints = np.asarray(plan.chosen.polyline, dtype=float)
    altitude = plan.chosen.altitude
    k = len(plan.members)
    slacks = []
    worst = math.inf
    for gu_id in plan.members:
        gu = gus[gu_id]
        entry = target_entry_for_rate(mcs_table, gu.offered_load, k)
        required = entry.min_snr + budget.snr_margin
        d = np.sqrt(
            (waypoints[:, 0] - gu.x) ** 2
            + (waypoints[:, 1] - gu.y) ** 2
            + altitude**2
        )
        slack = float(snr(budget, float(d.max())) - required)
        slacks.append((gu_id, slack))
        worst = min(worst, slack)
    ok = worst >= -1e-6
    if not ok and raise_on_violation:
        offender = min(slacks, key=lambda s: s[1])
        raise QosViolationError(
            f"plan for group {plan.group_id} violates QoS: GU {offender[0]} "
            f"short by {-offender[1]:.6f} dB along the chosen {plan.chosen.kind} path"
        )
    return QosReport(slacks=tuple(slacks), worst_slack=worst, ok=ok)

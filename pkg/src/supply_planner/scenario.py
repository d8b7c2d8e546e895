"""Scenario model, deterministic generation, pipeline and batch runs.

A scenario is a rectangular area with ground users at fixed positions
and offered loads.  run_pipeline turns one scenario into a complete
plan: group the users, rasterize each group's placement region, strip
overlaps in group order, pick the cheapest trajectory per group, and
re-verify every constraint from scratch.

Random scenarios are reproducible across platforms: generation draws
from Python's random.Random (the Mersenne Twister), whose output for a
given seed is part of the language's compatibility guarantees.  The
draw order is pinned: x then y per user (integer lattice points via
randrange), then one load per user, uniform on (0, C_max / n].
"""

from __future__ import annotations

import csv
import json
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from supply_planner.energy import EnergyParams, default_energy_params, hover_energy_per_hour
from supply_planner.errors import (
    DomainError,
    EmptyRegionError,
    InputError,
    QosViolationError,
)
from supply_planner.geometry import Region, intersection_region, remove_overlap
from supply_planner.grouping import (
    CandidateGrid,
    GroundUser,
    Grouping,
    minimize_faps,
    verify_grouping,
)
from supply_planner.rf_link import LinkBudget, McsTable, default_mcs_table
from supply_planner.trajectory import (
    FapPlan,
    QosReport,
    hover_trajectory,
    select_trajectory,
    verify_plan_qos,
)

BATCH_CSV_HEADER = (
    "label",
    "seed",
    "n_gus",
    "n_faps",
    "supply_energy_j",
    "hover_energy_j",
    "energy_ratio",
    "trajectories",
)

_FALLBACK_ALTITUDE_STEP = 3.0  # m of vertical separation for colliding hovers


@dataclass(frozen=True)
class Scenario:
    """One planning problem: area, altitude, channel capacity, users."""

    gus: tuple[GroundUser, ...]
    area: tuple[float, float] = (100.0, 100.0)
    altitude: float = 6.0
    channel_capacity: float = 500.0
    seed: int | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if not self.gus:
            raise DomainError("scenario needs at least one ground user")
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise DomainError(f"area must be positive, got {self.area}")
        if self.altitude < 0:
            raise DomainError(f"altitude must be >= 0, got {self.altitude}")
        if self.channel_capacity <= 0:
            raise DomainError(
                f"channel_capacity must be positive, got {self.channel_capacity}"
            )
        for i, gu in enumerate(self.gus):
            if not (0 <= gu.x <= self.area[0] and 0 <= gu.y <= self.area[1]):
                raise DomainError(
                    f"GU {i} at ({gu.x}, {gu.y}) lies outside the "
                    f"{self.area[0]} x {self.area[1]} area"
                )

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "seed": self.seed,
            "area": [self.area[0], self.area[1]],
            "altitude": self.altitude,
            "channel_capacity": self.channel_capacity,
            "gus": [
                {"x": gu.x, "y": gu.y, "z": gu.z, "offered_load": gu.offered_load}
                for gu in self.gus
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        try:
            gus = tuple(
                GroundUser(
                    x=float(g["x"]),
                    y=float(g["y"]),
                    offered_load=float(g["offered_load"]),
                    z=float(g.get("z", 0.0)),
                )
                for g in data["gus"]
            )
            area = data.get("area", [100.0, 100.0])
            return cls(
                gus=gus,
                area=(float(area[0]), float(area[1])),
                altitude=float(data.get("altitude", 6.0)),
                channel_capacity=float(data.get("channel_capacity", 500.0)),
                seed=None if data.get("seed") is None else int(data["seed"]),
                label=str(data.get("label", "")),
            )
        except DomainError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed scenario: {exc!r}") from exc

    @classmethod
    def from_file(cls, path: str) -> "Scenario":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read scenario {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
        try:
            return cls.from_dict(data)
        except DomainError as exc:
            raise InputError(f"{path}: {exc}") from exc

    def to_file(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def generate_scenario(
    n_gus: int,
    seed: int,
    area: tuple[float, float] = (100.0, 100.0),
    c_max: float = 500.0,
    altitude: float = 6.0,
) -> Scenario:
    """Deterministic random scenario.

    Positions are uniform on the 1 m lattice of the area; loads are
    i.i.d. uniform on (0, c_max / n_gus], so the aggregate never
    exceeds the channel capacity.
    """
    if n_gus < 1:
        raise DomainError(f"n_gus must be >= 1, got {n_gus}")
    rng = random.Random(seed)
    positions = [
        (
            float(rng.randrange(int(area[0]) + 1)),
            float(rng.randrange(int(area[1]) + 1)),
        )
        for _ in range(n_gus)
    ]
    cap = c_max / n_gus
    loads = [cap * (1.0 - rng.random()) for _ in range(n_gus)]
    gus = tuple(
        GroundUser(x=x, y=y, offered_load=load)
        for (x, y), load in zip(positions, loads)
    )
    return Scenario(
        gus=gus,
        area=area,
        altitude=altitude,
        channel_capacity=c_max,
        seed=seed,
        label=f"random-{n_gus}gu-{seed}",
    )


@dataclass(frozen=True)
class PlanResult:
    """Everything run_pipeline decided for one scenario."""

    scenario: Scenario
    grouping: Grouping
    plans: tuple[FapPlan, ...]
    qos: tuple[QosReport, ...]
    supply_energy: float
    hover_energy: float
    energy_ratio: float
    saving_pct: float
    warnings: tuple[str, ...]

    @property
    def n_faps(self) -> int:
        return len(self.plans)

    def trajectory_kinds(self) -> tuple[str, ...]:
        return tuple(plan.chosen.kind for plan in self.plans)


def _resolve_regions(
    grouping: Grouping,
    gus: Sequence[GroundUser],
    budget: LinkBudget,
    mcs_table: McsTable,
    grid: CandidateGrid,
) -> tuple[list[Region], dict[int, float], list[str]]:
    """Rasterize per-group regions, subtracting earlier groups' cells.

    When a region is wiped out entirely by the subtraction, the claim
    is abandoned: the group keeps its full region but both it and the
    earlier group it collided with most are demoted to hover, at
    altitudes one step apart, so the paths still cannot meet.  Returns
    the regions, a map group_id -> forced hover altitude, and warnings.
    """
    raw: list[Region] = []
    for gid, group in enumerate(grouping.groups):
        members = [gus[i] for i in group.members]
        raw.append(intersection_region(members, budget, mcs_table, grid, group_id=gid))

    regions: list[Region] = []
    claimed: list = []  # per-group (n, 2) index arrays, parallel to regions
    hover_only: dict[int, float] = {}
    warnings: list[str] = []
    for gid, region in enumerate(raw):
        previously = (
            np.vstack(claimed) if claimed else np.empty((0, 2), dtype=int)
        )
        try:
            region = remove_overlap(region, previously)
        except EmptyRegionError:
            # Fully shadowed by earlier groups: find the earlier group
            # stealing the most cells and separate the two vertically.
            overlaps = [
                (len(region.cells & regions[g].cells), g) for g in range(gid)
            ]
            _, blocker = max(overlaps, key=lambda t: (t[0], -t[1]))
            hover_only[blocker] = grid.altitude
            hover_only[gid] = grid.altitude + _FALLBACK_ALTITUDE_STEP
            warnings.append(
                f"group {gid} region fully overlaps earlier groups; groups "
                f"{blocker} and {gid} hover at altitudes {grid.altitude:g} "
                f"and {grid.altitude + _FALLBACK_ALTITUDE_STEP:g} m instead"
            )
        regions.append(region)
        claimed.append(region.cell_indices())
    return regions, hover_only, warnings


def run_pipeline(
    scenario: Scenario,
    params: EnergyParams | None = None,
    budget: LinkBudget | None = None,
    mcs_table: McsTable | None = None,
    grid_step: float = 1.0,
    mode: str = "exact",
    grouping: Grouping | None = None,
) -> PlanResult:
    """Plan one scenario end to end.

    Deterministic: identical inputs give identical results, bit for
    bit.  Every constraint the solver is trusted with is re-derived
    and re-asserted on the way out.
    """
    params = params or default_energy_params()
    budget = budget or LinkBudget()
    mcs_table = mcs_table or default_mcs_table()
    grid = CandidateGrid(
        x_range=(0.0, scenario.area[0]),
        y_range=(0.0, scenario.area[1]),
        step=grid_step,
        altitude=scenario.altitude,
    )
    if grouping is None:
        grouping = minimize_faps(
            scenario.gus, grid, budget, mcs_table, scenario.channel_capacity, mode=mode
        )
    verify_grouping(
        grouping, scenario.gus, grid, budget, mcs_table, scenario.channel_capacity
    )

    regions, hover_only, warnings = _resolve_regions(
        grouping, scenario.gus, budget, mcs_table, grid
    )

    plans: list[FapPlan] = []
    reports: list[QosReport] = []
    for gid, (group, region) in enumerate(zip(grouping.groups, regions)):
        plan_warnings: list[str] = []
        if gid in hover_only:
            altitude = hover_only[gid]
            chosen = hover_trajectory(region, params, altitude=altitude)
            candidates = (chosen,)
            plan_warnings.append(
                f"demoted to hover at {altitude:g} m after a region collision"
            )
        else:
            chosen, candidates = select_trajectory(region, params)
        plan = FapPlan(
            group_id=gid,
            members=group.members,
            region=region,
            candidates=candidates,
            chosen=chosen,
            hover_baseline_energy=hover_energy_per_hour(params),
            warnings=tuple(plan_warnings),
        )
        # A hover demotion may legitimately miss QoS targets (it flies
        # higher than the regions promise); keep it as a warning there.
        strict = gid not in hover_only
        report = verify_plan_qos(
            plan, scenario.gus, budget, mcs_table, raise_on_violation=strict
        )
        if not report.ok:
            warnings.append(
                f"group {gid} hover fallback misses its QoS target by "
                f"{-report.worst_slack:.2f} dB"
            )
        plans.append(plan)
        reports.append(report)

    if not grouping.exact:
        warnings.append(
            f"grouping is heuristic; group count may exceed the optimum by "
            f"up to {grouping.optimality_gap}"
        )

    supply = sum(plan.chosen.energy_per_hour for plan in plans)
    hover = len(plans) * hover_energy_per_hour(params)
    ratio = supply / hover
    if ratio > 1.0 + 1e-12:
        # Hover is always admissible, so exceeding the baseline means
        # the selection step is broken, not that the scenario is hard.
        raise QosViolationError(
            f"plan energy exceeds the all-hover baseline (ratio {ratio!r})"
        )
    return PlanResult(
        scenario=scenario,
        grouping=grouping,
        plans=tuple(plans),
        qos=tuple(reports),
        supply_energy=supply,
        hover_energy=hover,
        energy_ratio=ratio,
        saving_pct=(1.0 - ratio) * 100.0,
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class BatchRow:
    """One scenario's outcome inside a batch."""

    label: str
    seed: int | None
    n_gus: int
    n_faps: int
    supply_energy: float
    hover_energy: float
    energy_ratio: float
    trajectories: str


@dataclass(frozen=True)
class BatchResult:
    """Outcomes for a set of scenarios, ordered by seed."""

    rows: tuple[BatchRow, ...]


def _batch_worker(args: tuple) -> BatchRow:
    n_gus, seed, area, c_max, altitude = args
    scenario = generate_scenario(n_gus, seed, area=area, c_max=c_max, altitude=altitude)
    result = run_pipeline(scenario)
    return BatchRow(
        label=scenario.label,
        seed=seed,
        n_gus=n_gus,
        n_faps=result.n_faps,
        supply_energy=result.supply_energy,
        hover_energy=result.hover_energy,
        energy_ratio=result.energy_ratio,
        trajectories="+".join(result.trajectory_kinds()),
    )


def max_workers() -> int:
    """Worker cap from the SUPPLY_THREADS environment variable (default 1)."""
    raw = os.environ.get("SUPPLY_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise InputError(f"SUPPLY_THREADS must be an integer, got {raw!r}")
    return max(1, value)


def run_batch(
    n_gus: int,
    count: int,
    seed: int,
    area: tuple[float, float] = (100.0, 100.0),
    c_max: float = 500.0,
    altitude: float = 6.0,
    workers: int | None = None,
) -> BatchResult:
    """Plan `count` scenarios seeded seed, seed+1, ...

    Scenarios are independent, so they may be evaluated in parallel;
    rows come back sorted by seed either way.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if workers is None:
        workers = max_workers()
    jobs = [(n_gus, seed + i, area, c_max, altitude) for i in range(count)]
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_batch_worker, jobs, chunksize=8))
    else:
        rows = [_batch_worker(job) for job in jobs]
    rows.sort(key=lambda row: row.seed)
    return BatchResult(rows=tuple(rows))


def write_batch_csv(batch: BatchResult, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BATCH_CSV_HEADER)
        for row in batch.rows:
            writer.writerow(
                (
                    row.label,
                    "" if row.seed is None else row.seed,
                    row.n_gus,
                    row.n_faps,
                    repr(row.supply_energy),
                    repr(row.hover_energy),
                    repr(row.energy_ratio),
                    row.trajectories,
                )
            )


def read_batch_csv(path: str) -> BatchResult:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != BATCH_CSV_HEADER:
                raise InputError(
                    f"{path}: expected header {','.join(BATCH_CSV_HEADER)!r}"
                )
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(BATCH_CSV_HEADER):
                    raise InputError(f"{path}:{lineno}: expected {len(BATCH_CSV_HEADER)} fields")
                try:
                    rows.append(
                        BatchRow(
                            label=row[0],
                            seed=None if row[1] == "" else int(row[1]),
                            n_gus=int(row[2]),
                            n_faps=int(row[3]),
                            supply_energy=float(row[4]),
                            hover_energy=float(row[5]),
                            energy_ratio=float(row[6]),
                            trajectories=row[7],
                        )
                    )
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read batch CSV {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    return BatchResult(rows=tuple(rows))


def energy_ratio_stats(
    batch: BatchResult, percentiles: Iterable[float]
) -> list[tuple[float, float]]:
    """Nearest-rank percentiles of the batch's energy ratios."""
    if not batch.rows:
        raise DomainError("empty batch")
    ratios = sorted(row.energy_ratio for row in batch.rows)
    out = []
    for p in percentiles:
        if not 0 < p <= 100:
            raise DomainError(f"percentile must be in (0, 100], got {p}")
        rank = max(1, math.ceil(p / 100.0 * len(ratios)))
        out.append((p, ratios[rank - 1]))
    return out

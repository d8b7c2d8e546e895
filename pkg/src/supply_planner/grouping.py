"""Group ground users and pick a serving position candidate per group.

The goal is the minimum number of aerial access points such that every
ground user (GU) is served by exactly one of them.  A set of GUs can
share one access point at position p iff

  * every member's link at p sustains the member's offered load after
    the aggregate MCS rate is split fairly |group| ways, and
  * the per-member target MCS fair shares sum to at most the channel
    capacity C_max.

Feasibility of a group therefore reduces to a geometric test: each
member at fair share k needs the access point within its maximum link
distance, i.e. inside a disc on the flight plane, and a group is
placeable iff the members' discs share a candidate lattice point.

The exact solver enumerates partitions of the GU set over memoized
subset feasibility, growing the allowed group count from a clique
lower bound until a partition exists, so the returned count is provably
minimal.  A greedy mode trades optimality for speed and reports its
gap against the lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from supply_planner.errors import (
    DomainError,
    InfeasibleDemandError,
    InfeasibleError,
    QosViolationError,
)
from supply_planner.rf_link import (
    LinkBudget,
    McsTable,
    max_distance_for_rate,
    rate_for_snr,
    snr,
    target_entry_for_rate,
)


@dataclass(frozen=True)
class GroundUser:
    """A ground user: planar position, offered load in Mbit/s."""

    x: float
    y: float
    offered_load: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if self.offered_load <= 0:
            raise DomainError(f"offered_load must be positive, got {self.offered_load}")
        if self.z != 0.0:
            raise DomainError(f"ground users sit at z=0, got z={self.z}")


@dataclass(frozen=True)
class CandidateGrid:
    """Lattice of access-point position candidates on the flight plane.

    Candidates are the points (x0 + i*step, y0 + j*step) within the x
    and y ranges, all at the given altitude.  The same lattice (origin
    and step) also hosts the placement regions downstream, so regions
    may extend beyond the candidate bounds while staying aligned.
    """

    x_range: tuple[float, float] = (0.0, 100.0)
    y_range: tuple[float, float] = (0.0, 100.0)
    step: float = 1.0
    altitude: float = 6.0

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise DomainError(f"step must be positive, got {self.step}")
        if self.x_range[1] < self.x_range[0] or self.y_range[1] < self.y_range[0]:
            raise DomainError(f"degenerate ranges {self.x_range} x {self.y_range}")
        if self.altitude < 0:
            raise DomainError(f"altitude must be >= 0, got {self.altitude}")

    @property
    def origin(self) -> tuple[float, float]:
        return (self.x_range[0], self.y_range[0])

    @property
    def nx(self) -> int:
        return int(math.floor((self.x_range[1] - self.x_range[0]) / self.step + 1e-9)) + 1

    @property
    def ny(self) -> int:
        return int(math.floor((self.y_range[1] - self.y_range[0]) / self.step + 1e-9)) + 1

    def x_coords(self) -> np.ndarray:
        return self.x_range[0] + self.step * np.arange(self.nx)

    def y_coords(self) -> np.ndarray:
        return self.y_range[0] + self.step * np.arange(self.ny)

    def candidate_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened candidate coordinates, x-major (y varies fastest)."""
        return (np.repeat(self.x_coords(), self.ny), np.tile(self.y_coords(), self.nx))


@dataclass(frozen=True)
class Group:
    """One access point: provisional position (x, y, z) and member GU ids."""

    position: tuple[float, float, float]
    members: tuple[int, ...]


@dataclass(frozen=True)
class Grouping:
    """A complete assignment of GUs to access points.

    unassigned is always empty on objects returned by minimize_faps;
    infeasibility raises instead.  exact=False marks greedy-mode output
    whose group count may exceed the optimum by at most optimality_gap.
    """

    groups: tuple[Group, ...]
    exact: bool = True
    optimality_gap: int = 0
    unassigned: tuple[int, ...] = ()


def link_capacity_matrix(
    gus: Sequence[GroundUser],
    grid: CandidateGrid,
    budget: LinkBudget,
    mcs_table: McsTable,
) -> np.ndarray:
    """Aggregate achievable rate (Mbit/s) per GU x candidate, margin applied.

    Entry (i, p) is the unshared MCS rate of the link between GU i and
    candidate p after discounting the SNR margin; 0 where even the
    lowest MCS threshold is missed.  Candidates are flattened x-major
    as in CandidateGrid.candidate_xy().
    """
    if not gus:
        raise DomainError("need at least one ground user")
    cx, cy = grid.candidate_xy()
    thresholds = np.array([e.min_snr for e in mcs_table.entries])
    rates = np.concatenate(([0.0], [e.aggregate_rate for e in mcs_table.entries]))
    const = budget.tx_power - budget.noise_power + 20.0 * math.log10(
        budget.wavelength / (4.0 * math.pi)
    )
    out = np.empty((len(gus), cx.size))
    for i, gu in enumerate(gus):
        d2 = (cx - gu.x) ** 2 + (cy - gu.y) ** 2 + grid.altitude**2
        with np.errstate(divide="ignore"):
            snr_db = const - 10.0 * np.log10(d2)
        idx = np.searchsorted(thresholds, snr_db - budget.snr_margin, side="right")
        out[i] = rates[idx]
    return out


def _planar_radii_sq(
    gus: Sequence[GroundUser],
    budget: LinkBudget,
    mcs_table: McsTable,
    altitude: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per (GU, group size) squared disc radius on the flight plane.

    Returns (r2, fair) both shaped (n, n+1) and indexed [i, k] for group
    sizes k = 1..n; r2 is NaN where GU i cannot be served in a size-k
    group at all (load beyond the top MCS step, or the link ceiling is
    shorter than the altitude), and fair is that member's target-step
    fair share in Mbit/s (NaN likewise).
    """
    n = len(gus)
    r2 = np.full((n, n + 1), np.nan)
    fair = np.full((n, n + 1), np.nan)
    for i, gu in enumerate(gus):
        for k in range(1, n + 1):
            try:
                entry = target_entry_for_rate(mcs_table, gu.offered_load, k)
            except InfeasibleDemandError:
                continue
            dist = max_distance_for_rate(budget, mcs_table, gu.offered_load, k)
            planar_sq = dist * dist - altitude * altitude
            if planar_sq < 0:
                continue
            r2[i, k] = planar_sq
            fair[i, k] = entry.aggregate_rate / k
    return r2, fair


class _GroupSearch:
    """Shared state for the partition search over one GU set."""

    def __init__(
        self,
        gus: Sequence[GroundUser],
        grid: CandidateGrid,
        budget: LinkBudget,
        mcs_table: McsTable,
        c_max: float,
    ) -> None:
        self.n = len(gus)
        self.grid = grid
        self.c_max = c_max
        cx, cy = grid.candidate_xy()
        self.d2 = np.empty((self.n, cx.size))
        for i, gu in enumerate(gus):
            self.d2[i] = (cx - gu.x) ** 2 + (cy - gu.y) ** 2
        self.r2, self.fair = _planar_radii_sq(gus, budget, mcs_table, grid.altitude)
        self._feasible_cache: dict[int, bool] = {}
        self._pair_cache: dict[tuple[int, int], bool] = {}
        for i, gu in enumerate(gus):
            if math.isnan(self.r2[i, 1]) or not self.feasible(1 << i):
                raise InfeasibleDemandError(
                    f"GU {i} (load {gu.offered_load:g} Mbit/s) cannot be served by "
                    "any candidate position even alone",
                    gu=i,
                    load=gu.offered_load,
                )

    def members(self, mask: int) -> list[int]:
        return [i for i in range(self.n) if mask >> i & 1]

    def feasible(self, mask: int) -> bool:
        """Whether the GU subset can share one access point somewhere."""
        cached = self._feasible_cache.get(mask)
        if cached is not None:
            return cached
        members = self.members(mask)
        k = len(members)
        ok = True
        fair_sum = 0.0
        for i in members:
            if math.isnan(self.r2[i, k]):
                ok = False
                break
            fair_sum += self.fair[i, k]
        if ok and fair_sum > self.c_max + 1e-9:
            ok = False
        if ok:
            # members with the smallest discs first, to empty the
            # candidate set as early as possible
            members.sort(key=lambda i: self.r2[i, k])
            alive = self.d2[members[0]] <= self.r2[members[0], k]
            for i in members[1:]:
                alive &= self.d2[i] <= self.r2[i, k]
                if not alive.any():
                    break
            ok = bool(alive.any())
        self._feasible_cache[mask] = ok
        return ok

    def pair_lower_bound(self, mask: int) -> int:
        """Greedy clique of pairwise geometrically incompatible GUs.

        Disc radii shrink as groups grow, so two GUs whose size-2 discs
        share no candidate can never share a group of any size; each
        clique member therefore needs its own access point.
        """
        members = self.members(mask)
        clique: list[int] = []
        for i in members:
            if all(not self._pair_compatible(i, j) for j in clique):
                clique.append(i)
        return max(1, len(clique)) if members else 0

    def _pair_compatible(self, i: int, j: int) -> bool:
        key = (i, j) if i < j else (j, i)
        cached = self._pair_cache.get(key)
        if cached is not None:
            return cached
        if math.isnan(self.r2[i, 2]) or math.isnan(self.r2[j, 2]):
            ok = False
        else:
            both = (self.d2[i] <= self.r2[i, 2]) & (self.d2[j] <= self.r2[j, 2])
            ok = bool(both.any())
        self._pair_cache[key] = ok
        return ok

    def best_partition(self, n_groups: int) -> list[int] | None:
        """Best partition into exactly n_groups feasible blocks, or None.

        Best means: lexicographically smallest sorted group-size vector
        (singletons split off before mid-size groups, keeping the main
        groups as large as the constraints allow), then lexicographically
        smallest block list with larger blocks first.
        """
        full = (1 << self.n) - 1
        best: tuple[tuple[int, ...], tuple[tuple[int, ...], ...]] | None = None
        best_blocks: list[int] | None = None
        stack_blocks: list[int] = []

        def key_of(blocks: list[int]) -> tuple:
            tuples = sorted(
                (tuple(self.members(b)) for b in blocks),
                key=lambda t: (-len(t), t),
            )
            sizes = tuple(sorted(len(t) for t in tuples))
            return (sizes, tuples)

        def recurse(remaining: int, slots: int) -> None:
            nonlocal best, best_blocks
            if remaining == 0:
                if slots == 0:
                    key = key_of(stack_blocks)
                    if best is None or key < best:
                        best = key
                        best_blocks = list(stack_blocks)
                return
            if slots == 0:
                return
            count = bin(remaining).count("1")
            if count < slots or self.pair_lower_bound(remaining) > slots:
                return
            pivot = (remaining & -remaining).bit_length() - 1
            pivot_bit = 1 << pivot
            rest = remaining ^ pivot_bit
            # enumerate subsets of `rest`, empty subset included
            sub = rest
            while True:
                block = sub | pivot_bit
                if self.feasible(block):
                    stack_blocks.append(block)
                    recurse(remaining ^ block, slots - 1)
                    stack_blocks.pop()
                if sub == 0:
                    break
                sub = (sub - 1) & rest
            return

        recurse(full, n_groups)
        return best_blocks

    def greedy_partition(self) -> list[int]:
        """Largest-first greedy cover; deterministic and always feasible."""
        from itertools import combinations

        remaining = list(range(self.n))
        blocks: list[int] = []
        while remaining:
            found = None
            for size in range(len(remaining), 0, -1):
                for combo in combinations(remaining, size):
                    mask = 0
                    for i in combo:
                        mask |= 1 << i
                    if self.feasible(mask):
                        found = mask
                        break
                if found is not None:
                    break
            assert found is not None  # singletons are pre-checked feasible
            blocks.append(found)
            remaining = [i for i in remaining if not found >> i & 1]
        return blocks

    def place(self, blocks: list[int]) -> list[Group]:
        """Pick one distinct candidate per block, maximizing worst slack.

        Slack of a member at a candidate is its disc radius minus the
        planar distance; the kept position maximizes the smallest member
        slack so downstream placement regions stay as roomy as possible.
        Ties fall to the lexicographically smallest coordinates.

        Groups come out largest first: larger groups have tighter discs,
        so letting them claim placement area first keeps the later,
        roomier groups from shadowing them.
        """
        cx, cy = self.grid.candidate_xy()
        used: set[int] = set()
        groups = []
        ordered = sorted(
            (tuple(self.members(b)) for b in blocks), key=lambda t: (-len(t), t)
        )
        for members in ordered:
            k = len(members)
            slack = np.full(cx.size, np.inf)
            for i in members:
                slack = np.minimum(
                    slack, math.sqrt(self.r2[i, k]) - np.sqrt(self.d2[i])
                )
            for p in used:
                slack[p] = -np.inf
            pick = int(np.argmax(slack))
            if not slack[pick] >= 0:
                raise InfeasibleError(
                    "no remaining distinct candidate position serves group "
                    f"{members}"
                )
            used.add(pick)
            position = (float(cx[pick]), float(cy[pick]), self.grid.altitude)
            groups.append(Group(position=position, members=members))
        return groups


def minimize_faps(
    gus: Sequence[GroundUser],
    grid: CandidateGrid,
    budget: LinkBudget,
    mcs_table: McsTable,
    c_max: float,
    mode: str = "exact",
) -> Grouping:
    """Partition GUs into the minimum number of servable groups.

    Exact mode proves minimality by exhausting partitions below the
    returned count; greedy mode returns a feasible cover flagged with
    its worst-case optimality gap.  Deterministic in both modes.
    """
    if not gus:
        raise DomainError("need at least one ground user")
    if c_max <= 0:
        raise DomainError(f"channel capacity must be positive, got {c_max}")
    if mode not in ("exact", "greedy"):
        raise DomainError(f"unknown mode {mode!r}")
    search = _GroupSearch(gus, grid, budget, mcs_table, c_max)
    lower = search.pair_lower_bound((1 << len(gus)) - 1)
    if mode == "greedy":
        blocks = search.greedy_partition()
        return Grouping(
            groups=tuple(search.place(blocks)),
            exact=False,
            optimality_gap=len(blocks) - lower,
        )
    for n_groups in range(lower, len(gus) + 1):
        blocks = search.best_partition(n_groups)
        if blocks is not None:
            return Grouping(groups=tuple(search.place(blocks)))
    raise InfeasibleError(
        "no feasible grouping exists: the channel capacity cannot cover the "
        "offered loads under any partition",
        c_max=c_max,
        n_gus=len(gus),
    )


def verify_grouping(
    grouping: Grouping,
    gus: Sequence[GroundUser],
    grid: CandidateGrid,
    budget: LinkBudget,
    mcs_table: McsTable,
    c_max: float,
) -> None:
    """Re-derive every constraint from geometry; raise on any violation.

    Trusts nothing from the solver: loads against fair-share rates at
    the actual link distances, target fair shares against the channel
    capacity, exact coverage, and pairwise-distinct positions.
    """
    seen: dict[int, int] = {}
    positions = set()
    for g, group in enumerate(grouping.groups):
        x, y, z = group.position
        if not (
            grid.x_range[0] <= x <= grid.x_range[1]
            and grid.y_range[0] <= y <= grid.y_range[1]
            and z == grid.altitude
        ):
            raise QosViolationError(f"group {g} position {group.position} off-grid")
        if group.position in positions:
            raise QosViolationError(f"duplicate position {group.position}")
        positions.add(group.position)
        k = len(group.members)
        fair_sum = 0.0
        for i in group.members:
            if i in seen:
                raise QosViolationError(f"GU {i} in groups {seen[i]} and {g}")
            seen[i] = g
            gu = gus[i]
            dist = math.dist((x, y, z), (gu.x, gu.y, gu.z))
            achievable = rate_for_snr(
                mcs_table, snr(budget, dist) - budget.snr_margin, k
            )
            if achievable + 1e-9 < gu.offered_load:
                raise QosViolationError(
                    f"GU {i} load {gu.offered_load:g} exceeds fair share "
                    f"{achievable:g} at group {g} position"
                )
            fair_sum += target_entry_for_rate(mcs_table, gu.offered_load, k).aggregate_rate / k
        if fair_sum > c_max + 1e-9:
            raise QosViolationError(
                f"group {g} target fair shares {fair_sum:g} exceed capacity {c_max:g}"
            )
    if len(seen) != len(gus) or grouping.unassigned:
        raise QosViolationError("grouping does not cover every GU exactly once")

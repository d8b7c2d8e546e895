"""Free-space link budget math and MCS rate lookup.

Line-of-sight links between an aerial access point and ground users are
modeled with free-space path loss over a constant noise floor, so the
SNR of a link depends only on distance.  Achievable data rates come
from an ordered table of SNR thresholds: a link runs at the highest
MCS step whose threshold its SNR clears, and the aggregate step rate is
shared fairly among the users on the channel.

Inverting the path-loss model gives the maximum distance at which a
link still supports a required rate, which is what the placement
stages consume.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from supply_planner.errors import DomainError, InfeasibleDemandError, InputError

SPEED_OF_LIGHT = 3.0e8  # m/s

MCS_CSV_HEADER = ("min_snr_db", "aggregate_rate_mbps")


@dataclass(frozen=True)
class LinkBudget:
    """Constant link parameters: transmit power, noise floor, carrier.

    Attributes:
        tx_power: transmit power in dBm.
        noise_power: background noise power in dBm, treated as constant.
        frequency: carrier frequency in Hz.
        snr_margin: safety margin in dB added on top of MCS thresholds
            when sizing links, so small SNR fluctuations do not drop
            the selected rate step.
    """

    tx_power: float = 20.0
    noise_power: float = -85.0
    frequency: float = 5.25e9
    snr_margin: float = 1.0

    def __post_init__(self) -> None:
        if self.frequency <= 0:
            raise DomainError(f"frequency must be positive, got {self.frequency}")
        if self.snr_margin < 0:
            raise DomainError(f"snr_margin must be >= 0, got {self.snr_margin}")

    @property
    def wavelength(self) -> float:
        """Carrier wavelength in meters."""
        return SPEED_OF_LIGHT / self.frequency


@dataclass(frozen=True)
class McsEntry:
    """One rate step: minimum SNR in dB and aggregate data rate in Mbit/s."""

    min_snr: float
    aggregate_rate: float


@dataclass(frozen=True)
class McsTable:
    """Ordered SNR-threshold to aggregate-rate steps.

    Entries must be strictly increasing in both threshold and rate;
    a higher MCS that pays its SNR cost with a lower rate would never
    be selected and indicates a corrupt table.
    """

    entries: tuple[McsEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise DomainError("MCS table must have at least one entry")
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.min_snr <= prev.min_snr or cur.aggregate_rate <= prev.aggregate_rate:
                raise DomainError(
                    "MCS entries must be strictly increasing in both "
                    f"min_snr and aggregate_rate: {prev} then {cur}"
                )

    @property
    def max_aggregate_rate(self) -> float:
        return self.entries[-1].aggregate_rate


def load_mcs_table(path: str) -> McsTable:
    """Read an MCS table from CSV with header min_snr_db,aggregate_rate_mbps."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip() for h in header) != MCS_CSV_HEADER:
                raise InputError(
                    f"{path}: expected header {','.join(MCS_CSV_HEADER)!r}, got {header}"
                )
            entries = []
            for lineno, row in enumerate(reader, start=2):
                if not row or (len(row) == 1 and not row[0].strip()):
                    continue
                if len(row) != 2:
                    raise InputError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
                try:
                    entries.append(McsEntry(float(row[0]), float(row[1])))
                except ValueError as exc:
                    raise InputError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise InputError(f"cannot read MCS table {path}: {exc}") from exc
    try:
        return McsTable(tuple(entries))
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from exc


@lru_cache(maxsize=1)
def default_mcs_table() -> McsTable:
    """The MCS table shipped with the package."""
    ref = resources.files("supply_planner").joinpath("data/mcs_table.csv")
    with resources.as_file(ref) as path:
        return load_mcs_table(str(path))


def received_power(budget: LinkBudget, distance: float) -> float:
    """Received power in dBm at the given link distance in meters.

    Free-space path loss: the linear power ratio is (wavelength /
    (4*pi*distance))^2, i.e. 20*log10 of the one-way term in dB.
    """
    if distance <= 0:
        raise DomainError(f"distance must be positive, got {distance}")
    return budget.tx_power + 20.0 * math.log10(
        budget.wavelength / (4.0 * math.pi * distance)
    )


def snr(budget: LinkBudget, distance: float) -> float:
    """Link SNR in dB at the given distance in meters."""
    return received_power(budget, distance) - budget.noise_power


def rate_for_snr(table: McsTable, snr_db: float, n_sharing: int = 1) -> float:
    """Fair-share data rate in Mbit/s available at the given SNR.

    Picks the highest MCS step whose threshold the SNR clears and
    divides its aggregate rate by the number of users sharing the
    channel.  Below the lowest threshold the link is unusable and the
    rate is 0.
    """
    if n_sharing < 1:
        raise DomainError(f"n_sharing must be >= 1, got {n_sharing}")
    best = 0.0
    for entry in table.entries:
        if entry.min_snr <= snr_db:
            best = entry.aggregate_rate
        else:
            break
    return best / n_sharing


def target_entry_for_rate(
    table: McsTable, required_rate: float, n_sharing: int = 1
) -> McsEntry:
    """Smallest MCS step whose fair share covers the required rate."""
    if required_rate <= 0:
        raise DomainError(f"required_rate must be positive, got {required_rate}")
    if n_sharing < 1:
        raise DomainError(f"n_sharing must be >= 1, got {n_sharing}")
    for entry in table.entries:
        if entry.aggregate_rate / n_sharing >= required_rate:
            return entry
    raise InfeasibleDemandError(
        f"required rate {required_rate:g} Mbit/s shared {n_sharing} ways exceeds "
        f"the top MCS step ({table.max_aggregate_rate:g} Mbit/s aggregate)",
        required_rate=required_rate,
        n_sharing=n_sharing,
    )


def max_distance_for_rate(
    budget: LinkBudget, table: McsTable, required_rate: float, n_sharing: int = 1
) -> float:
    """Maximum link distance in meters that still supports a required rate.

    Selects the smallest MCS step able to accommodate the rate at the
    given sharing level, targets that step's threshold plus the SNR
    margin, and inverts the path-loss model:

        d = wavelength / (4*pi) * 10 ** ((tx - noise - target_snr) / 20)

    Raises InfeasibleDemandError when even the top step cannot cover
    the required rate.
    """
    entry = target_entry_for_rate(table, required_rate, n_sharing)
    target_snr = entry.min_snr + budget.snr_margin
    exponent = (budget.tx_power - budget.noise_power - target_snr) / 20.0
    return budget.wavelength / (4.0 * math.pi) * 10.0**exponent

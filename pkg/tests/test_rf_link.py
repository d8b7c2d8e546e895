"""Link-budget and MCS-table behavior."""

import math

import pytest
from hypothesis import given, strategies as st

from supply_planner.errors import DomainError, InfeasibleDemandError, InputError
from supply_planner.rf_link import (
    LinkBudget,
    McsEntry,
    McsTable,
    default_mcs_table,
    load_mcs_table,
    max_distance_for_rate,
    rate_for_snr,
    received_power,
    snr,
    target_entry_for_rate,
)

BUDGET = LinkBudget()
TABLE = default_mcs_table()


def fspl_db(distance: float, frequency: float) -> float:
    # Independent path-loss oracle: 20 log10(4 pi d f / c).
    return 20.0 * math.log10(4.0 * math.pi * distance * frequency / 3.0e8)


def test_default_budget_constants():
    assert BUDGET.tx_power == 20.0
    assert BUDGET.noise_power == -85.0
    assert BUDGET.frequency == 5.25e9
    assert BUDGET.snr_margin == 1.0


def test_received_power_matches_fspl_oracle():
    for d in (1.0, 5.0, 37.2, 100.0, 159.5, 1000.0):
        expected = BUDGET.tx_power - fspl_db(d, BUDGET.frequency)
        assert received_power(BUDGET, d) == pytest.approx(expected, abs=1e-9)


def test_received_power_rejects_nonpositive_distance():
    with pytest.raises(DomainError):
        received_power(BUDGET, 0.0)
    with pytest.raises(DomainError):
        received_power(BUDGET, -3.0)


def test_snr_is_received_power_over_noise_floor():
    d = 42.0
    assert snr(BUDGET, d) == pytest.approx(received_power(BUDGET, d) + 85.0)


@given(st.floats(min_value=0.1, max_value=5000.0), st.floats(min_value=0.1, max_value=5000.0))
def test_snr_decreases_with_distance(d1, d2):
    lo, hi = sorted((d1, d2))
    assert snr(BUDGET, lo) >= snr(BUDGET, hi)


def test_default_table_shape():
    entries = TABLE.entries
    assert len(entries) == 10
    assert entries[0] == McsEntry(min_snr=13.1, aggregate_rate=53.0)
    assert entries[-1] == McsEntry(min_snr=35.3, aggregate_rate=553.0)
    assert TABLE.max_aggregate_rate == 553.0


def test_rate_for_snr_steps():
    assert rate_for_snr(TABLE, 12.9) == 0.0  # below the lowest threshold
    assert rate_for_snr(TABLE, 13.1) == 53.0
    assert rate_for_snr(TABLE, 13.59) == 53.0
    assert rate_for_snr(TABLE, 13.6) == 103.0
    assert rate_for_snr(TABLE, 30.0) == 447.0
    assert rate_for_snr(TABLE, 99.0) == 553.0


def test_rate_for_snr_fair_share():
    assert rate_for_snr(TABLE, 20.0, n_sharing=2) == pytest.approx(198.0 / 2)
    assert rate_for_snr(TABLE, 20.0, n_sharing=5) == pytest.approx(198.0 / 5)
    with pytest.raises(DomainError):
        rate_for_snr(TABLE, 20.0, n_sharing=0)


@given(st.floats(min_value=-10.0, max_value=60.0), st.floats(min_value=-10.0, max_value=60.0))
def test_rate_for_snr_monotone_in_snr(s1, s2):
    lo, hi = sorted((s1, s2))
    assert rate_for_snr(TABLE, lo) <= rate_for_snr(TABLE, hi)


def test_target_entry_picks_smallest_sufficient_step():
    assert target_entry_for_rate(TABLE, 53.0).aggregate_rate == 53.0
    assert target_entry_for_rate(TABLE, 53.1).aggregate_rate == 103.0
    assert target_entry_for_rate(TABLE, 99.0, n_sharing=2).aggregate_rate == 198.0
    assert target_entry_for_rate(TABLE, 100.0, n_sharing=2).aggregate_rate == 287.0
    # 5 users at 73 Mbit/s each need a 365 aggregate; first step over is 368
    assert target_entry_for_rate(TABLE, 73.0, n_sharing=5).aggregate_rate == 368.0


def test_target_entry_rejects_impossible_demand():
    with pytest.raises(InfeasibleDemandError):
        target_entry_for_rate(TABLE, 554.0)
    with pytest.raises(InfeasibleDemandError):
        target_entry_for_rate(TABLE, 300.0, n_sharing=2)
    err = None
    try:
        target_entry_for_rate(TABLE, 600.0)
    except InfeasibleDemandError as exc:
        err = exc.to_dict()
    assert err is not None and err["error"] == "InfeasibleDemandError"


def test_max_distance_closes_the_loop():
    """At the returned distance the SNR equals threshold plus margin."""
    for rate, sharing in ((53.0, 1), (117.0, 1), (200.0, 1), (23.0, 5), (49.0, 10)):
        entry = target_entry_for_rate(TABLE, rate, sharing)
        d = max_distance_for_rate(BUDGET, TABLE, rate, sharing)
        assert snr(BUDGET, d) == pytest.approx(entry.min_snr + BUDGET.snr_margin, abs=1e-9)
        # the margin keeps the step alive a bit past d; once distance
        # grows by 10^(margin/20) the raw threshold itself is lost
        d_loss = d * 10.0 ** (BUDGET.snr_margin / 20.0)
        assert rate_for_snr(TABLE, snr(BUDGET, d_loss + 1e-6), sharing) < rate


def test_max_distance_for_lowest_step():
    """Bisection oracle for the published operating point: 53 Mbit/s."""
    target = 13.1 + BUDGET.snr_margin
    lo, hi = 1.0, 1000.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if snr(BUDGET, mid) >= target:
            lo = mid
        else:
            hi = mid
    d = max_distance_for_rate(BUDGET, TABLE, 53.0)
    assert d == pytest.approx(lo, rel=1e-9)
    assert d == pytest.approx(159.497, abs=5e-3)


def test_max_distance_monotone_in_rate():
    rates = (53.0, 103.0, 152.0, 198.0, 287.0, 368.0, 405.0, 447.0, 518.0, 553.0)
    dists = [max_distance_for_rate(BUDGET, TABLE, r) for r in rates]
    assert dists == sorted(dists, reverse=True)


def test_zero_margin_reaches_farther():
    flat = LinkBudget(snr_margin=0.0)
    assert max_distance_for_rate(flat, TABLE, 53.0) > max_distance_for_rate(
        BUDGET, TABLE, 53.0
    )
    with pytest.raises(DomainError):
        LinkBudget(snr_margin=-1.0)


def test_mcs_table_requires_monotone_steps():
    with pytest.raises(DomainError):
        McsTable(entries=(McsEntry(13.1, 53.0), McsEntry(13.1, 103.0)))
    with pytest.raises(DomainError):
        McsTable(entries=(McsEntry(13.1, 53.0), McsEntry(14.0, 53.0)))
    with pytest.raises(DomainError):
        McsTable(entries=())


def test_load_mcs_table_roundtrip(tmp_path):
    path = tmp_path / "mcs.csv"
    path.write_text(
        "min_snr_db,aggregate_rate_mbps\n13.1,53\n13.6,103\n16.1,152\n"
    )
    table = load_mcs_table(str(path))
    assert [e.aggregate_rate for e in table.entries] == [53.0, 103.0, 152.0]


def test_load_mcs_table_rejects_bad_files(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("snr,rate\n13.1,53\n")
    with pytest.raises(InputError):
        load_mcs_table(str(bad_header))

    bad_value = tmp_path / "v.csv"
    bad_value.write_text("min_snr_db,aggregate_rate_mbps\n13.1,fast\n")
    with pytest.raises(InputError):
        load_mcs_table(str(bad_value))

    with pytest.raises(InputError):
        load_mcs_table(str(tmp_path / "missing.csv"))

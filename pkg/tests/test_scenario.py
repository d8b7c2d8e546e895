"""Scenario model, generation, pipeline, batches, statistics."""

import math
import os

import numpy as np
import pytest

from supply_planner.energy import default_energy_params, hover_energy_per_hour
from supply_planner.errors import DomainError, InputError
from supply_planner.grouping import GroundUser
from supply_planner.scenario import (
    BatchResult,
    BatchRow,
    Scenario,
    energy_ratio_stats,
    generate_scenario,
    max_workers,
    read_batch_csv,
    run_batch,
    run_pipeline,
    write_batch_csv,
)


def small_scenario() -> Scenario:
    return Scenario(
        gus=(
            GroundUser(x=40.0, y=45.0, offered_load=120.0),
            GroundUser(x=60.0, y=55.0, offered_load=90.0),
        ),
        label="pair",
    )


def test_scenario_defaults_and_validation():
    sc = small_scenario()
    assert sc.area == (100.0, 100.0)
    assert sc.altitude == 6.0
    assert sc.channel_capacity == 500.0
    with pytest.raises(DomainError):
        Scenario(gus=())
    with pytest.raises(DomainError):
        Scenario(gus=(GroundUser(x=200.0, y=0.0, offered_load=1.0),))
    with pytest.raises(DomainError):
        Scenario(gus=(GroundUser(x=1.0, y=1.0, offered_load=1.0),), channel_capacity=0.0)
    with pytest.raises(DomainError):
        Scenario(gus=(GroundUser(x=1.0, y=1.0, offered_load=1.0),), area=(0.0, 100.0))


def test_scenario_json_roundtrip(tmp_path):
    sc = small_scenario()
    assert Scenario.from_dict(sc.to_dict()) == sc
    path = tmp_path / "sc.json"
    sc.to_file(str(path))
    assert Scenario.from_file(str(path)) == sc


def test_scenario_from_file_errors(tmp_path):
    with pytest.raises(InputError):
        Scenario.from_file(str(tmp_path / "none.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{]")
    with pytest.raises(InputError):
        Scenario.from_file(str(bad))
    short = tmp_path / "short.json"
    short.write_text('{"gus": [{"x": 1}]}')
    with pytest.raises(InputError):
        Scenario.from_file(str(short))


def test_generate_scenario_is_deterministic():
    a = generate_scenario(5, seed=31)
    b = generate_scenario(5, seed=31)
    assert a == b
    assert a != generate_scenario(5, seed=32)
    assert a.label == "random-5gu-31"


def test_generate_scenario_respects_capacity_and_bounds():
    for n in (1, 2, 5, 10):
        sc = generate_scenario(n, seed=n, c_max=500.0)
        total = sum(gu.offered_load for gu in sc.gus)
        assert 0 < total <= 500.0
        for gu in sc.gus:
            assert 0 < gu.offered_load <= 500.0 / n
            assert 0 <= gu.x <= 100 and 0 <= gu.y <= 100
            assert gu.x == int(gu.x) and gu.y == int(gu.y)
            assert gu.z == 0.0


def test_generated_scenarios_distinct_across_seeds():
    seen = {generate_scenario(2, seed=s) for s in range(1, 201)}
    assert len(seen) >= 199


def test_generate_scenario_rejects_bad_n():
    with pytest.raises(DomainError):
        generate_scenario(0, seed=1)


def test_run_pipeline_basic_invariants():
    result = run_pipeline(small_scenario())
    assert result.n_faps == 1
    assert 0 < result.energy_ratio <= 1
    assert result.saving_pct == pytest.approx((1 - result.energy_ratio) * 100)
    assert result.supply_energy == pytest.approx(
        sum(p.chosen.energy_per_hour for p in result.plans)
    )
    assert result.hover_energy == pytest.approx(
        result.n_faps * hover_energy_per_hour(default_energy_params())
    )
    for report in result.qos:
        assert report.ok and report.worst_slack >= -1e-6


def test_run_pipeline_is_deterministic():
    a = run_pipeline(small_scenario())
    b = run_pipeline(small_scenario())
    assert a.supply_energy == b.supply_energy
    assert a.grouping == b.grouping
    assert [p.chosen.polyline for p in a.plans] == [p.chosen.polyline for p in b.plans]


def test_run_pipeline_regions_disjoint_across_groups():
    sc = generate_scenario(8, seed=77, c_max=500.0)
    result = run_pipeline(sc)
    claimed: set = set()
    for plan in result.plans:
        cells = plan.region.cells
        assert not (cells & claimed)
        claimed |= cells


def test_colliding_singletons_fall_back_to_stacked_hover():
    sc = Scenario(
        gus=(
            GroundUser(x=50.0, y=50.0, offered_load=300.0),
            GroundUser(x=50.0, y=50.0, offered_load=300.0),
        ),
        label="collision",
    )
    result = run_pipeline(sc)
    assert result.n_faps == 2
    assert result.trajectory_kinds() == ("hover", "hover")
    assert sorted(p.chosen.altitude for p in result.plans) == [6.0, 9.0]
    assert result.energy_ratio == pytest.approx(1.0)
    assert any("overlap" in w for w in result.warnings)
    assert all(p.warnings for p in result.plans)


def test_greedy_mode_flag_shows_up_in_warnings():
    sc = generate_scenario(6, seed=5)
    result = run_pipeline(sc, mode="greedy")
    assert result.grouping.exact is False
    assert any("heuristic" in w for w in result.warnings)


def test_run_batch_rows_sorted_and_bounded():
    batch = run_batch(n_gus=2, count=8, seed=100, workers=1)
    assert len(batch.rows) == 8
    assert [row.seed for row in batch.rows] == list(range(100, 108))
    for row in batch.rows:
        assert 0 < row.energy_ratio <= 1.0
        assert row.n_gus == 2
        assert row.n_faps >= 1
        assert row.supply_energy <= row.hover_energy + 1e-9


def test_run_batch_parallel_matches_serial():
    serial = run_batch(n_gus=3, count=6, seed=50, workers=1)
    parallel = run_batch(n_gus=3, count=6, seed=50, workers=3)
    assert serial == parallel


def test_run_batch_rejects_bad_count():
    with pytest.raises(DomainError):
        run_batch(n_gus=2, count=0, seed=1)


def test_batch_csv_roundtrip(tmp_path):
    batch = run_batch(n_gus=2, count=5, seed=7, workers=1)
    path = tmp_path / "batch.csv"
    write_batch_csv(batch, str(path))
    again = read_batch_csv(str(path))
    assert again == batch


def test_batch_csv_rejects_corruption(tmp_path):
    path = tmp_path / "batch.csv"
    path.write_text("label,seed\nx,1\n")
    with pytest.raises(InputError):
        read_batch_csv(str(path))
    header_only = tmp_path / "empty.csv"
    header_only.write_text(
        "label,seed,n_gus,n_faps,supply_energy_j,hover_energy_j,energy_ratio,trajectories\n"
    )
    with pytest.raises(InputError):
        read_batch_csv(str(header_only))


def test_energy_ratio_stats_nearest_rank():
    rows = tuple(
        BatchRow(
            label=f"s{i}",
            seed=i,
            n_gus=2,
            n_faps=1,
            supply_energy=float(i),
            hover_energy=10.0,
            energy_ratio=i / 10.0,
            trajectories="circular",
        )
        for i in range(1, 11)
    )
    batch = BatchResult(rows=rows)
    stats = dict(energy_ratio_stats(batch, [10, 50, 90, 100]))
    # nearest rank: ceil(p/100 * 10) -> 1st, 5th, 9th, 10th smallest
    assert stats[10] == pytest.approx(0.1)
    assert stats[50] == pytest.approx(0.5)
    assert stats[90] == pytest.approx(0.9)
    assert stats[100] == pytest.approx(1.0)


def test_energy_ratio_stats_all_equal():
    rows = tuple(
        BatchRow("s", i, 2, 1, 5.0, 10.0, 0.5, "hover") for i in range(4)
    )
    stats = energy_ratio_stats(BatchResult(rows=rows), [25, 50, 75, 99])
    assert all(v == pytest.approx(0.5) for _, v in stats)


def test_energy_ratio_stats_rejects_bad_input():
    with pytest.raises(DomainError):
        energy_ratio_stats(BatchResult(rows=()), [50])
    rows = (BatchRow("s", 1, 2, 1, 5.0, 10.0, 0.5, "hover"),)
    with pytest.raises(DomainError):
        energy_ratio_stats(BatchResult(rows=rows), [0])
    with pytest.raises(DomainError):
        energy_ratio_stats(BatchResult(rows=rows), [101])


def test_max_workers_env(monkeypatch):
    monkeypatch.delenv("SUPPLY_THREADS", raising=False)
    assert max_workers() == 1
    monkeypatch.setenv("SUPPLY_THREADS", "4")
    assert max_workers() == 4
    monkeypatch.setenv("SUPPLY_THREADS", "0")
    assert max_workers() == 1
    monkeypatch.setenv("SUPPLY_THREADS", "many")
    with pytest.raises(InputError):
        max_workers()

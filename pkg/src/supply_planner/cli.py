"""Command-line frontend.

Three subcommands: `plan` runs one scenario end to end and writes a
versioned JSON document (optionally an SVG), `batch` plans a sweep of
seeded random scenarios into a CSV, and `report` turns such a CSV into
percentile statistics.

Exit codes are part of the contract: 0 success, 1 for I/O, parse, and
usage problems, 2 for scenarios that are infeasible under the QoS
constraints (with a machine-readable diagnostic on stderr).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import supply_planner
from supply_planner.energy import EnergyParams, default_energy_params
from supply_planner.errors import DomainError, InfeasibleError, InputError
from supply_planner.rf_link import LinkBudget, default_mcs_table, load_mcs_table
from supply_planner.scenario import (
    PlanResult,
    Scenario,
    energy_ratio_stats,
    read_batch_csv,
    run_batch,
    run_pipeline,
    write_batch_csv,
)

SCHEMA_VERSION = 1


def _finite(value: float) -> float | None:
    # Straight segments carry an infinite turn radius internally; JSON
    # has no Infinity, so they serialize as null.
    return value if math.isfinite(value) else None


def _trajectory_dict(traj) -> dict:
    return {
        "kind": traj.kind,
        "center": list(traj.center),
        "altitude": traj.altitude,
        "orientation": traj.orientation,
        "segments": [
            {"length_m": length, "turn_radius_m": _finite(radius)}
            for length, radius in traj.segments
        ],
        "speeds_mps": list(traj.speeds),
        "segment_powers_w": list(traj.segment_powers),
        "mean_power_w": traj.mean_power,
        "energy_per_hour_j": traj.energy_per_hour,
        "lap_time_s": traj.lap_time,
        "polyline": [list(point) for point in traj.polyline],
    }


def plan_document(result: PlanResult) -> dict:
    """The JSON-ready record of one planning run.

    Totals are recomputable from the per-FAP entries: supply energy is
    the sum of chosen energies, hover energy the sum of baselines.
    """
    faps = []
    for plan, qos in zip(result.plans, result.qos):
        candidates = [
            {
                "kind": cand.kind,
                "energy_per_hour_j": cand.energy_per_hour,
                "mean_power_w": cand.mean_power,
                "lap_time_s": cand.lap_time,
            }
            for cand in plan.candidates
        ]
        faps.append(
            {
                "group_id": plan.group_id,
                "members": list(plan.members),
                "region": {
                    "cell_count": plan.region.cell_count,
                    "step_m": plan.region.step,
                    "centroid": list(plan.region.centroid),
                    "hover_point": list(plan.region.hover_point),
                    "altitude_m": plan.region.altitude,
                },
                "candidates": candidates,
                "chosen": _trajectory_dict(plan.chosen),
                "hover_baseline_energy_j": plan.hover_baseline_energy,
                "qos": {
                    "ok": qos.ok,
                    "worst_slack_db": qos.worst_slack,
                    "slacks_db": [[gu_id, slack] for gu_id, slack in qos.slacks],
                },
                "warnings": list(plan.warnings),
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "supply-planner", "version": supply_planner.__version__},
        "scenario": result.scenario.to_dict(),
        "grouping": {
            "exact": result.grouping.exact,
            "optimality_gap": result.grouping.optimality_gap,
            "groups": [
                {
                    "id": gid,
                    "position": list(group.position),
                    "members": list(group.members),
                }
                for gid, group in enumerate(result.grouping.groups)
            ],
        },
        "faps": faps,
        "totals": {
            "n_faps": result.n_faps,
            "supply_energy_j": result.supply_energy,
            "hover_energy_j": result.hover_energy,
            "energy_ratio": result.energy_ratio,
            "saving_pct": result.saving_pct,
        },
        "warnings": list(result.warnings),
    }


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage, but this tool reserves 2 for
    # infeasible scenarios; usage problems belong with exit 1.
    def error(self, message: str) -> None:  # noqa: D102
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="supply", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"supply-planner {supply_planner.__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    plan = sub.add_parser("plan", help="plan one scenario from a JSON file")
    plan.add_argument("--scenario", required=True, help="scenario JSON file")
    plan.add_argument("--params", help="aircraft constants file (name = value lines)")
    plan.add_argument("--mcs", help="MCS table CSV (min_snr_db,aggregate_rate_mbps)")
    plan.add_argument("--out", help="write the plan document here (default stdout)")
    plan.add_argument("--svg", help="also draw the plan to this SVG file")
    plan.add_argument("--altitude", type=float, help="override the scenario's altitude (m)")
    plan.add_argument("--margin", type=float, help="SNR margin in dB (default 1)")

    batch = sub.add_parser("batch", help="plan seeded random scenarios into a CSV")
    batch.add_argument("--gus", type=int, required=True, help="ground users per scenario")
    batch.add_argument("--count", type=int, required=True, help="number of scenarios")
    batch.add_argument("--seed", type=int, required=True, help="seed of the first scenario")
    batch.add_argument("--out", required=True, help="output CSV path")
    batch.add_argument("--capacity", type=float, default=500.0, help="channel capacity (Mbit/s)")
    batch.add_argument("--altitude", type=float, default=6.0, help="flight altitude (m)")

    report = sub.add_parser("report", help="percentile statistics from a batch CSV")
    report.add_argument("--in", dest="in_csv", required=True, help="batch CSV path")
    report.add_argument(
        "--percentiles", default="50,90", help="comma-separated levels (default 50,90)"
    )
    report.add_argument("--svg", help="draw the energy-ratio CDF to this SVG file")
    return parser


def _cmd_plan(args: argparse.Namespace) -> int:
    scenario = Scenario.from_file(args.scenario)
    if args.altitude is not None:
        scenario = dataclasses.replace(scenario, altitude=args.altitude)
    params = EnergyParams.from_file(args.params) if args.params else default_energy_params()
    mcs_table = load_mcs_table(args.mcs) if args.mcs else default_mcs_table()
    budget = LinkBudget(snr_margin=args.margin) if args.margin is not None else LinkBudget()

    result = run_pipeline(scenario, params=params, budget=budget, mcs_table=mcs_table)
    text = json.dumps(plan_document(result), indent=2, allow_nan=False)
    if args.out:
        _write_text(args.out, text + "\n")
    else:
        print(text)
    if args.svg:
        from supply_planner.render import render_plan

        render_plan(result, args.svg)
    return 0


def _cmd_batch(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.count < 1:
        parser.error(f"--count must be >= 1, got {args.count}")
    if args.gus < 1:
        parser.error(f"--gus must be >= 1, got {args.gus}")
    if args.seed < 0:
        parser.error(f"--seed must be >= 0, got {args.seed}")
    batch = run_batch(
        n_gus=args.gus,
        count=args.count,
        seed=args.seed,
        c_max=args.capacity,
        altitude=args.altitude,
    )
    write_batch_csv(batch, args.out)
    return 0


def _cmd_report(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        levels = [float(part) for part in args.percentiles.split(",") if part.strip()]
    except ValueError:
        parser.error(f"--percentiles must be comma-separated numbers, got {args.percentiles!r}")
    if not levels:
        parser.error("--percentiles must name at least one level")
    batch = read_batch_csv(args.in_csv)
    stats = energy_ratio_stats(batch, levels)
    print(f"scenarios: {len(batch.rows)}")
    mean_faps = sum(row.n_faps for row in batch.rows) / len(batch.rows)
    print(f"mean FAPs: {mean_faps:.3f}")
    print("percentile  energy_ratio")
    for level, value in stats:
        label = f"p{level:g}"
        print(f"{label:<11} {value:.4f}")
    if args.svg:
        from supply_planner.render import render_cdf

        render_cdf(batch, args.svg)
    return 0


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "plan":
            return _cmd_plan(args)
        if args.command == "batch":
            return _cmd_batch(args, parser)
        return _cmd_report(args, parser)
    except (InputError, DomainError) as exc:
        print(f"supply: error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

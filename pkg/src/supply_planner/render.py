"""SVG rendering of plans and batch statistics.

Output must be byte-identical across runs of the same input, so the
figures are written through the Agg backend with a fixed hash salt and
no embedded creation date.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from supply_planner.scenario import BatchResult, PlanResult

_HASH_SALT = "supply-planner"
_GROUP_COLORS = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
)


def _save(fig, path: str) -> None:
    # hashsalt pins the ids matplotlib embeds in the SVG; Date: None
    # drops the timestamp.  Together they make output reproducible.
    with plt.rc_context({"svg.hashsalt": _HASH_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_plan(result: PlanResult, path: str) -> None:
    """Draw GUs, placement regions, and chosen trajectories to an SVG."""
    scenario = result.scenario
    fig, ax = plt.subplots(figsize=(7.0, 7.0))

    for plan in result.plans:
        color = _GROUP_COLORS[plan.group_id % len(_GROUP_COLORS)]
        pts = plan.region.cell_points()
        ax.scatter(
            pts[:, 0],
            pts[:, 1],
            s=2.0,
            marker="s",
            color=color,
            alpha=0.18,
            linewidths=0,
            zorder=1,
        )
        poly = np.asarray(plan.chosen.polyline)
        if len(poly) > 1:
            closed = np.vstack([poly, poly[:1]])
            ax.plot(
                closed[:, 0],
                closed[:, 1],
                color=color,
                linewidth=1.6,
                zorder=3,
                label=f"FAP {plan.group_id}: {plan.chosen.kind}",
            )
        else:
            ax.plot(
                poly[0, 0],
                poly[0, 1],
                marker="*",
                markersize=12,
                color=color,
                linestyle="none",
                zorder=3,
                label=f"FAP {plan.group_id}: {plan.chosen.kind}",
            )

    for gu_id, gu in enumerate(scenario.gus):
        ax.plot(gu.x, gu.y, marker="^", markersize=7, color="black", zorder=4)
        ax.annotate(
            f"{gu_id}",
            (gu.x, gu.y),
            textcoords="offset points",
            xytext=(4, 4),
            fontsize=8,
        )

    ax.set_xlim(-2, scenario.area[0] + 2)
    ax.set_ylim(-2, scenario.area[1] + 2)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    title = scenario.label or "scenario"
    ax.set_title(f"{title}: {result.n_faps} FAP(s), saving {result.saving_pct:.1f}%")
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def render_cdf(batch: BatchResult, path: str) -> None:
    """Empirical CDF of per-scenario energy ratios."""
    ratios = np.sort(np.array([row.energy_ratio for row in batch.rows]))
    cdf = np.arange(1, len(ratios) + 1) / len(ratios)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.step(ratios, cdf, where="post", color="#1f77b4", linewidth=1.6)
    ax.set_xlabel("energy ratio vs hover")
    ax.set_ylabel("CDF")
    ax.set_ylim(0, 1.02)
    ax.grid(True, linewidth=0.4, alpha=0.5)
    ax.set_title(f"energy ratio CDF ({len(ratios)} scenarios)")
    _save(fig, path)

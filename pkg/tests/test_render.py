"""SVG rendering sanity: well-formed, deterministic, one artist per FAP."""

import xml.etree.ElementTree as ET

from supply_planner.grouping import GroundUser
from supply_planner.render import render_cdf, render_plan
from supply_planner.scenario import Scenario, run_batch, run_pipeline


def test_plan_svg_is_valid_xml_with_legend_entries(tmp_path):
    sc = Scenario(
        gus=(
            GroundUser(x=30.0, y=30.0, offered_load=150.0),
            GroundUser(x=75.0, y=75.0, offered_load=220.0),
        ),
        label="render-pair",
    )
    result = run_pipeline(sc)
    path = tmp_path / "plan.svg"
    render_plan(result, str(path))
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    text = path.read_text()
    for plan in result.plans:
        assert f"FAP {plan.group_id}: {plan.chosen.kind}" in text
    assert "render-pair" in text


def test_plan_svg_draws_hover_fallbacks_as_markers(tmp_path):
    sc = Scenario(
        gus=(
            GroundUser(x=50.0, y=50.0, offered_load=300.0),
            GroundUser(x=50.0, y=50.0, offered_load=300.0),
        ),
        label="stacked",
    )
    result = run_pipeline(sc)
    assert result.trajectory_kinds() == ("hover", "hover")
    path = tmp_path / "fallback.svg"
    render_plan(result, str(path))
    assert "FAP 0: hover" in path.read_text()


def test_cdf_svg_deterministic(tmp_path):
    batch = run_batch(n_gus=2, count=5, seed=21, workers=1)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_cdf(batch, str(a))
    render_cdf(batch, str(b))
    assert a.read_bytes() == b.read_bytes()
    assert ET.parse(a).getroot().tag.endswith("svg")

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from qlev.render import EmptyInputError, RenderSpec, normal_color, render_trajectories, render_zone_map

NS = "{http://www.w3.org/2000/svg}"


def closed_item():
    a = np.linspace(0, 2 * np.pi, 50)
    return {"points": np.column_stack([np.cos(a), np.sin(a)]).tolist(), "termination": "Closed",
            "label": {"kind": "Compact"}}


def open_item():
    t = np.linspace(0, 10, 100)
    pts = np.column_stack([t, 0.1 * np.sin(5 * t)])
    return {"points": pts.tolist(), "termination": "BudgetExhausted",
            "label": {"kind": "OpenStrip", "normal": [1, 0, 0, 0], "direction2": [1.0, 0.0], "width": 0.2}}


def test_closed_curve_single_path_with_closepath():
    root = ET.fromstring(render_trajectories([closed_item()]))
    paths = root.findall(f"{NS}path")
    assert len(paths) == 1 and paths[0].get("d").endswith("Z")
    assert root.get("version") == "1.1"


def test_open_strip_path_and_two_parallel_lines():
    root = ET.fromstring(render_trajectories([open_item()]))
    assert len(root.findall(f"{NS}path")) == 1
    lines = root.findall(f"{NS}line")
    assert len(lines) == 2
    for ln in lines:
        # direction (1, 0): horizontal boundary lines
        assert ln.get("y1") == ln.get("y2")
    off = render_trajectories([open_item()], RenderSpec(strip_boundaries=False))
    assert "<line" not in off


def test_deterministic_and_palette():
    assert render_trajectories([open_item(), closed_item()]) == render_trajectories([open_item(), closed_item()])
    assert normal_color((1, 0, 0, 0)) == normal_color([1, 0, 0, 0])
    unresolved = dict(closed_item(), label={"kind": "Unresolved"})
    assert "#9e9e9e" in render_trajectories([unresolved])


def test_zone_map_svg():
    doc = {"zones": [[0, 1], [0, 1]], "legend": {"0": "AllCompact", "1": "n=1,0,0,0"},
           "boundary": [[1, 1], [1, 1]]}
    root = ET.fromstring(render_zone_map(doc))
    rects = root.findall(f"{NS}rect")
    assert len(rects) == 5  # background plus four cells
    assert normal_color((1, 0, 0, 0)) in render_zone_map(doc)


def test_empty_input():
    with pytest.raises(EmptyInputError):
        render_trajectories([])
    with pytest.raises(EmptyInputError):
        render_zone_map({"zones": [], "legend": {}})

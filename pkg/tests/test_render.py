import re

import pytest

from wignerflow.cli import main
from wignerflow.render import MixedGridError, RenderStyle, load_panel, render_panel, render_sheet


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("render")
    out = {}
    for name, argv in (
        ("psi1", ["stag", "--potential", "eckart", "--state", "1", "--grid", "128"]),
        ("pair", ["stag", "--potential", "eckart", "--state", "0,1", "--phase", "0.3", "--grid", "128"]),
        ("coarse", ["stag", "--potential", "eckart", "--state", "1", "--grid", "64"]),
    ):
        assert main(argv + ["--out", str(root / name)]) == 0
        out[name] = root / name
    return out


def test_render_is_deterministic(runs):
    style = RenderStyle(size=320)
    a = render_panel(load_panel(runs["psi1"]), style)
    b = render_panel(load_panel(runs["psi1"]), style)
    assert a == b
    assert a.startswith("<?xml") and a.rstrip().endswith("</svg>")


def test_markers_follow_charges(runs):
    panel = load_panel(runs["psi1"])
    svg = render_panel(panel)
    charges = [pt["omega"] for pt in panel.points]
    assert len(re.findall(r'class="marker plus"', svg)) == charges.count(1)
    assert len(re.findall(r'class="marker minus"', svg)) == charges.count(-1)
    assert len(panel.points) == 9


def test_overlay_toggle(runs):
    panel = load_panel(runs["pair"])
    assert 'class="overlay"' in render_panel(panel, RenderStyle(overlay=True))
    assert 'class="overlay"' not in render_panel(panel, RenderStyle(overlay=False))


def test_mixed_grids_are_rejected(runs, tmp_path):
    (tmp_path / "fields").mkdir()
    (tmp_path / "fields" / "w.csv").write_text((runs["psi1"] / "fields" / "w.csv").read_text())
    (tmp_path / "fields" / "jp.csv").write_text((runs["coarse"] / "fields" / "jp.csv").read_text())
    with pytest.raises(MixedGridError):
        load_panel(tmp_path)


def test_missing_field_is_an_error(tmp_path):
    with pytest.raises(ValueError):
        load_panel(tmp_path)


def test_sheet_layout(runs):
    svgs = [render_panel(load_panel(runs[k]), RenderStyle(size=200)) for k in ("psi1", "pair", "coarse")]
    sheet = render_sheet(svgs, 2, ["a", "b", "c"])
    assert sheet.count("<svg") == 4
    assert ">a<" in sheet and ">c<" in sheet

import json

import pytest

from wignerflow import cli
from wignerflow.cli import build_parser, load_preset, main, preset_names
from wignerflow.io import RunManifest


def test_eigs_succeeds(tmp_path):
    assert main(["eigs", "--potential", "morse", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "reports" / "eigs.json").read_text())
    assert report["passed"] and report["states"][0]["closed_form"] == 127 / 256
    assert RunManifest.read(tmp_path).status == 0


def test_failed_validation_exits_one(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "ENERGY_TOLERANCE", 0.0)
    assert main(["eigs", "--potential", "eckart", "--out", str(tmp_path)]) == 1
    assert RunManifest.read(tmp_path).status == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["eigs", "--bogus"],
        ["eigs", "--potential", "square"],
        ["eigs", "--potential", "harmonic", "--depth", "4"],
        ["eigs", "--potential", "eckart", "--depth", "-1"],
        ["eigs", "--potential", "rosen-morse", "--count", "9"],
        ["eigs", "--potential", "polynomial"],
        ["stag", "--state", "2,1"],
        ["stag", "--state", "x"],
        ["stag", "--grid", "100"],
        ["stag", "--cutoff", "99"],
        ["stag", "--state", "1", "--phase", "0.5"],
        ["stag", "--potential", "eckart", "--domain", "5"],
        ["track", "--state", "1"],
        ["stag", "--preset", "no-such-preset"],
        ["stag", "--preset", "weak-odd-cubic-tracks"],
        ["render", "/no/such/dir"],
        [],
    ],
)
def test_usage_errors_exit_two(tmp_path, argv):
    assert main(argv + (["--out", str(tmp_path)] if argv and argv[0] != "render" else [])) == 2


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "replay" in capsys.readouterr().out


def test_presets_are_valid():
    names = preset_names()
    assert "morse-minimum-vortex-shift" in names
    _, subs = build_parser()
    for name in names:
        preset = load_preset(name)
        assert preset["command"] in subs
        dests = {a.dest for a in subs[preset["command"]]._actions}
        assert set(preset["args"]) <= dests, name


def test_preset_flags_can_be_overridden(tmp_path):
    assert main(["stag", "--preset", "eckart-first-excited-flow", "--grid", "64", "--out", str(tmp_path)]) == 0
    manifest = RunManifest.read(tmp_path)
    assert manifest.args["grid"] == 64 and manifest.args["potential"] == "eckart"


def test_stag_layout_and_replay(tmp_path):
    run = tmp_path / "run"
    assert main(["stag", "--potential", "morse", "--state", "1", "--grid", "128", "--render", "--out", str(run)]) == 0
    manifest = RunManifest.read(run)
    assert {p.split("/")[0] for p in manifest.outputs} == {"fields", "reports", "renders"}
    for rel in manifest.outputs:
        assert (run / rel).is_file()
    assert manifest.constants["significance"] == 1e-3
    report = json.loads((run / "reports" / "stagnation.json").read_text())
    assert len(report["points"]) == 7
    assert main(["replay", str(run)]) == 0
    assert (run / "replay" / "manifest.json").is_file()


def test_replay_detects_tampering(tmp_path):
    run = tmp_path / "run"
    assert main(["wigner", "--state", "0,1", "--grid", "64", "--out", str(run)]) == 0
    w = next((run / "fields").glob("w.*"))
    lines = w.read_text().splitlines()
    lines[5] = ",".join("0.5" for _ in lines[5].split(","))
    w.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(run)]) == 1


def test_json_format(tmp_path):
    assert main(["flow", "--state", "1", "--grid", "64", "--format", "json", "--out", str(tmp_path)]) == 0
    assert any(p.suffix == ".json" for p in (tmp_path / "fields").iterdir())


def test_render_command(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["stag", "--state", "1", "--grid", "64", "--out", str(a)]) == 0
    assert main(["stag", "--state", "0,1", "--grid", "64", "--out", str(b)]) == 0
    assert main(["render", str(a), str(b), "--labels", "psi1,pair", "--out", str(tmp_path / "sheet")]) == 0
    assert (tmp_path / "sheet" / "renders" / "sheet.svg").is_file()
    assert main(["render", str(a), "--labels", "x,y", "--out", str(tmp_path / "bad")]) == 2


def test_check_single_module(tmp_path):
    assert main(["check", "--potential", "harmonic", "--module", "cli-io", "--out", str(tmp_path)]) == 0

import os

import pytest

from blayer.bench import PatchTestConfig, config_to_tree
from blayer.cli import build_parser, main
from blayer.io import read_summary, write_config


def test_parser_has_all_subcommands():
    parser = build_parser()
    subs = next(a for a in parser._actions
                if a.dest == "command").choices
    for cmd in ("offset-validate", "patch-test", "bending-beam",
                "convergence-block", "hertz", "run"):
        assert cmd in subs


def test_offset_validate_cli(tmp_path, capsys):
    out = str(tmp_path / "ov")
    rc = main(["offset-validate", "--out", out, "--strict"])
    assert rc == 0
    summary = read_summary(os.path.join(out, "summary.txt"))
    assert summary["run"]["status"] == "pass"
    stdout = capsys.readouterr().out
    assert "PASS" in stdout


def test_patch_test_single_variant_cli(tmp_path):
    out = str(tmp_path / "pt")
    rc = main(["patch-test", "--variant", "straight", "--out", out])
    assert rc == 0
    summary = read_summary(os.path.join(out, "patch_straight_summary.txt"))
    assert summary["checks"]["stress_uniform"] == "pass"
    assert summary["checks"]["uy_linear"] == "pass"


def test_run_config_file(tmp_path):
    out = str(tmp_path / "run-out")
    cfg = PatchTestConfig(variant="inclined")
    path = str(tmp_path / "patch.ini")
    write_config(path, config_to_tree("patch-test", cfg))
    rc = main(["run", path, "--out", out])
    assert rc == 0
    summary = read_summary(os.path.join(out, "patch_inclined_summary.txt"))
    assert summary["run"]["status"] == "pass"


def test_bad_config_writes_error_summary(tmp_path, capsys):
    path = str(tmp_path / "bad.ini")
    write_config(path, {"benchmark": {"name": "not-a-benchmark"}})
    out = str(tmp_path / "err-out")
    rc = main(["run", path, "--out", out])
    assert rc == 2
    summary = read_summary(os.path.join(out, "summary.txt"))
    assert summary["run"]["status"] == "error"
    assert summary["run"]["failure_category"] == "config"


def test_bad_variant_categorized_as_config(tmp_path):
    path = str(tmp_path / "bad2.ini")
    cfg = PatchTestConfig(variant="bogus")
    write_config(path, config_to_tree("patch-test", cfg))
    out = str(tmp_path / "err2")
    rc = main(["run", path, "--out", out])
    assert rc == 2
    summary = read_summary(os.path.join(out, "summary.txt"))
    assert summary["run"]["failure_category"] == "config"


def test_entry_point_installed():
    import shutil
    assert shutil.which("blayer") is not None

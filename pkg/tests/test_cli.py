import json
import math
import textwrap

import pytest

from schottky_lab import commands
from schottky_lab.cli import build_parser, main
from schottky_lab.zeros import Zero, ZeroList


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return path


ZEROS = """
    command = "zeros"
    [group]
    preset = "elementary"
    ell = 2.0
    [zeros]
    rect = [-0.5, 1.0, 2.0, 4.5]
    M = 24
"""


def report(out):
    return json.loads((out / "report.json").read_text())


def test_parser_overrides():
    args = build_parser().parse_args(["words", "--config", "run.toml", "--threads", "2", "--seed", "9"])
    assert (args.command, args.threads, args.seed) == ("words", 2, 9)
    with pytest.raises(SystemExit):
        build_parser().parse_args(["plot", "--config", "run.toml"])


def test_zeros_run(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(write(tmp_path, ZEROS)), "--out", str(out), "--threads", "2"]) == 0
    payload = report(out)
    assert payload["exit_code"] == 0
    assert payload["outputs"] == ["zeros.csv"]
    assert payload["validation"]["passed"]
    assert payload["results"]["count_with_multiplicity"] == 2
    assert (out / "zeros.csv").read_text().startswith("re_s,im_s,abs_det,M,newton_iters")
    assert {"build_group", "validate_group", "zeros"} <= set(json.loads((out / "timings.json").read_text()))


def test_rerun_is_byte_identical(tmp_path):
    path = write(tmp_path, ZEROS)
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(path), "--out", str(first)]) == 0
    assert main(["--config", str(path), "--out", str(second), "--threads", "1"]) == 0
    assert (first / "zeros.csv").read_bytes() == (second / "zeros.csv").read_bytes()
    assert report(first)["results"] == report(second)["results"]


def test_command_override(tmp_path):
    out = tmp_path / "out"
    assert main(["validate", "--config", str(write(tmp_path, ZEROS)), "--out", str(out)]) == 0
    assert report(out)["results"] == {"letters": 2, "r": 1}


def test_dimension_of_elementary_group(tmp_path):
    text = """
        command = "dimension"
        [group]
        preset = "elementary"
        ell = 2.0
        [dimension]
        target_count = 200
        scales = 3
    """
    out = tmp_path / "out"
    assert main(["--config", str(write(tmp_path, text)), "--out", str(out)]) == 0
    assert abs(report(out)["results"]["bowen_dimension"]) <= 1e-6


def test_too_few_h_values(tmp_path):
    text = """
        command = "fup"
        [group]
        preset = "elementary"
        ell = 2.0
        [fup]
        h = [0.1, 0.05, 0.025]
    """
    out = tmp_path / "out"
    assert main(["--config", str(write(tmp_path, text)), "--out", str(out)]) == 1
    assert report(out)["error"].startswith("InsufficientSamplesError")


def test_unverified_zero_exits_with_numerical_failure(tmp_path, monkeypatch):
    def unverified(data, rect, M, **kwargs):
        return ZeroList((Zero(1j * math.pi, 0.0, 4, M, 2, 1e-3),), rect, M)

    monkeypatch.setattr(commands, "find_zeros", unverified)
    out = tmp_path / "out"
    assert main(["--config", str(write(tmp_path, ZEROS)), "--out", str(out)]) == 2
    payload = report(out)
    assert payload["exit_code"] == 2
    assert payload["error"].startswith("ConvergenceError")


def test_negative_radius(tmp_path, capsys):
    text = """
        command = "validate"
        [[group.disks]]
        center = 2.0
        radius = -1.0
        [[group.disks]]
        center = -2.0
        radius = 0.5
    """
    assert main(["--config", str(write(tmp_path, text)), "--out", str(tmp_path / "out")]) == 1
    assert "group.disks[0].radius" in capsys.readouterr().err


def test_overlapping_disks(tmp_path):
    text = """
        command = "validate"
        [[group.disks]]
        center = 0.5
        radius = 1.0
        [[group.disks]]
        center = -0.5
        radius = 1.0
    """
    out = tmp_path / "out"
    assert main(["--config", str(write(tmp_path, text)), "--out", str(out)]) == 1
    payload = report(out)
    assert payload["validation"]["disjoint"] is False
    assert payload["exit_code"] == 1
    assert payload["error"].startswith("SchottkyValidationError")


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "absent.toml")]) == 1

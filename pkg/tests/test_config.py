import textwrap

import pytest

from schottky_lab.config import (
    FupParams,
    WordsParams,
    load_config,
    parse_config,
    with_overrides,
)
from schottky_lab.schottky import validate_schottky

ZEROS = textwrap.dedent(
    """
    command = "zeros"
    seed = 11

    [group]
    preset = "elementary"
    ell = 2.0

    [zeros]
    rect = [-0.5, 1.0, -10.0, 10.0]
    M = 24
    """
)


def issues(text):
    result = parse_config(text)
    assert result.is_error()
    return {issue.path: issue.message for issue in result.error.issues}


class TestParse:

    def test_valid(self):
        config = parse_config(ZEROS).default_value(None)
        assert config.command == "zeros"
        assert config.seed == 11
        assert config.params().rect == (-0.5, 1.0, -10.0, 10.0)
        assert validate_schottky(config.group.build()).passed

    def test_explicit_disks(self):
        config = parse_config(
            textwrap.dedent(
                """
                command = "validate"
                [[group.disks]]
                center = 2.0
                radius = 0.5
                [[group.disks]]
                center = -2.0
                radius = 0.5
                """
            )
        ).default_value(None)
        data = config.group.build()
        assert data.r == 1
        assert config.params() is None

    def test_radius_path(self):
        found = issues(
            textwrap.dedent(
                """
                command = "validate"
                [[group.disks]]
                center = 2.0
                radius = -0.5
                [[group.disks]]
                center = -2.0
                radius = 0.5
                """
            )
        )
        assert "group.disks[0].radius" in found

    def test_one_group_spec(self):
        found = issues(
            textwrap.dedent(
                """
                command = "validate"
                [group]
                preset = "elementary"
                ell = 1.0
                [[group.disks]]
                center = 2.0
                radius = 0.5
                """
            )
        )
        assert "exactly one group spec" in found["group"]

    def test_unknown_key(self):
        found = issues('command = "validate"\nbogus = 1\n[group]\npreset = "elementary"\nell = 1.0\n')
        assert "bogus" in found

    def test_missing_section(self):
        found = issues('command = "fup"\n[group]\npreset = "elementary"\nell = 1.0\n')
        assert "[fup]" in found["<root>"]

    def test_bad_toml(self):
        assert "not valid TOML" in issues("command = [")["<root>"]

    def test_unknown_command(self):
        assert "command" in issues('command = "plot"\n[group]\npreset = "elementary"\nell = 1.0\n')


class TestDefaults:

    def test_section_defaults(self):
        config = parse_config(
            'command = "words"\n[group]\npreset = "symmetric"\nr = 2\ngap_angle = 0.5\n'
        ).default_value(None)
        assert config.params() == WordsParams()
        assert config.output == "out"
        assert config.threads is None

    def test_fup_defaults(self):
        params = FupParams(h=[0.1])
        assert params.rho == 0.8
        assert params.C0 == [1.0]
        assert params.certify


class TestOverrides:

    def test_none_keeps(self):
        config = parse_config(ZEROS).default_value(None)
        assert with_overrides(config, seed=None).default_value(None) is config

    def test_override_revalidates(self):
        config = parse_config(ZEROS).default_value(None)
        updated = with_overrides(config, seed=3, output="runs/a", threads=2).default_value(None)
        assert (updated.seed, updated.output, updated.threads) == (3, "runs/a", 2)
        assert with_overrides(config, threads=0).is_error()

    def test_command_switch_needs_section(self):
        config = parse_config(ZEROS).default_value(None)
        assert with_overrides(config, command="validate").is_ok()
        assert with_overrides(config, command="localization").is_error()


def test_load_missing_file(tmp_path):
    result = load_config(tmp_path / "absent.toml")
    assert result.is_error()
    assert result.error.issues[0].path == "<file>"


def test_load_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(ZEROS, encoding="utf-8")
    assert load_config(path).is_ok()

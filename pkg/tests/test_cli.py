"""
Tests for INI run configs and the command-line exit codes.
"""

import os
import sys
import textwrap

import pytest

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exterior_hessian.errors import ConfigurationError
from exterior_hessian.components.cli import RunConfig, parse_config, serialize_config
from exterior_hessian.components.cli.commands import (
    EXIT_CHECKS_FAILED,
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_IO,
    EXIT_NO_INPUT,
    EXIT_OK,
    exit_code,
)
from main import main

RADIAL = textwrap.dedent("""
    [problem]
    n = 3
    k = 1
    r0 = 1.0
    R0 = 4.0

    [schedules]
    eps = 0.1
    R = 600

    [solver]
    nodes_per_decade = 16

    [analysis]
    b_values = 1.0
    t_grid = -0.9, -0.5, -0.2
    ring_eps = 0.2, 0.1
""")

CARTESIAN = textwrap.dedent("""
    [problem]
    n = 2
    k = 1
    r0 = 1.0
    R0 = 2.5

    [domain]
    shape = ball
    radius = 1.0

    [schedules]
    eps = 0.1
    R = 8

    [solver]
    mode = cartesian
    grid_spacing = 0.25
""")


def _field_of(text):
    with pytest.raises(ConfigurationError) as info:
        parse_config(text)
    return info.value.field


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------- config files

def test_parse_radial_config():
    config = parse_config(RADIAL)
    assert isinstance(config, RunConfig)
    assert config.schedules.R == [600.0]
    assert config.analysis.t_grid == [-0.9, -0.5, -0.2]
    assert config.solve_config().nodes_per_decade == 16
    assert config.domain_model().radius == 1.0
    assert config.checkpoint_path("out") == os.path.join("out", "checkpoint.npz")


def test_serialized_config_parses_back():
    for text in (RADIAL, CARTESIAN):
        config = parse_config(text)
        assert parse_config(serialize_config(config)) == config


def test_subsolution_overrides():
    config = parse_config(RADIAL + "\n[subsolution]\ndelta = 0.05\n")
    glue = config.glue(config.base_params())
    assert glue.delta == 0.05


@pytest.mark.parametrize("patch,field", [
    (("[schedules]\neps = 0.1\nR = 600", "[schedules]\neps = 0.1, 0.05\nR = 900, 600"), "schedules.R"),
    (("[schedules]\neps = 0.1", "[schedules]\neps = 0.05, 0.1"), "schedules.eps"),
    (("b_values = 1.0", "b_values = 0.1"), "analysis.b_values"),
    (("k = 1", "k = 1\nspeed = 3"), "problem.speed"),
    (("k = 1", "k = 4"), "problem"),
    (("[solver]", "[solver]\nmode = cartesian"), "solver.grid_spacing"),
    (("nodes_per_decade = 16", "nodes_per_decade = many"), "solver.nodes_per_decade"),
])
def test_config_errors_name_the_field(patch, field):
    old, new = patch
    assert _field_of(RADIAL.replace(old, new)) == field


def test_unknown_section_and_syntax():
    assert _field_of(RADIAL + "\n[plotting]\ndpi = 300\n") == "plotting"
    with pytest.raises(ConfigurationError):
        parse_config("n = 3\n")


def test_radial_mode_needs_centred_ball():
    text = RADIAL.replace("[schedules]", "[domain]\nshape = ball\ncenter = 0.2, 0.0, 0.0\n\n[schedules]")
    assert _field_of(text) == "domain"


def test_exit_code_mapping():
    assert exit_code({"status": "success", "passed": True}) == EXIT_OK
    assert exit_code({"status": "success", "passed": False}) == EXIT_CHECKS_FAILED
    assert exit_code({"status": "error", "error_type": "configuration"}) == EXIT_CONFIG
    assert exit_code({"status": "error", "error_type": "checkpoint"}) == EXIT_NO_INPUT
    assert exit_code({"status": "error", "error_type": "internal"}) == 2


# ---------------------------------------------------------------- main

def test_usage_errors():
    assert main([]) == EXIT_CONFIG
    assert main(["solve"]) == EXIT_CONFIG
    assert main(["--help"]) == EXIT_OK


def test_missing_and_invalid_config(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "absent.ini"), "--out", str(tmp_path)]) == EXIT_IO
    bad = _write(tmp_path, RADIAL.replace("k = 1", "k = 4"))
    assert main(["solve", "--config", bad, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_verify_without_checkpoint(tmp_path):
    config = _write(tmp_path, RADIAL)
    assert main(["verify", "--config", config, "--out", str(tmp_path / "out")]) == EXIT_NO_INPUT


def test_solve_verify_and_fit_decay(tmp_path):
    config = _write(tmp_path, RADIAL)
    out = str(tmp_path / "out")
    assert main(["solve", "--config", config, "--out", out]) in (EXIT_OK, EXIT_CHECKS_FAILED)
    assert os.path.exists(os.path.join(out, "checkpoint.npz"))
    assert os.path.exists(os.path.join(out, "diagnostics.csv"))
    assert os.path.exists(os.path.join(out, "runs.json"))

    assert main(["verify", "--config", config, "--out", out, "--threads", "2"]) in (EXIT_OK, EXIT_CHECKS_FAILED)
    assert os.path.exists(os.path.join(out, "inequality.csv"))
    assert os.path.exists(os.path.join(out, "series_b1.csv"))

    assert main(["fit-decay", "--config", config, "--out", out]) in (EXIT_OK, EXIT_CHECKS_FAILED)
    assert os.path.exists(os.path.join(out, "decay.csv"))
    # reports are not overwritten without --force
    assert main(["fit-decay", "--config", config, "--out", out]) == EXIT_IO
    assert main(["fit-decay", "--config", config, "--out", out, "--force"]) in (EXIT_OK, EXIT_CHECKS_FAILED)


def test_fit_decay_needs_span(tmp_path):
    config = _write(tmp_path, CARTESIAN)
    out = str(tmp_path / "out")
    assert main(["solve", "--config", config, "--out", out]) in (EXIT_OK, EXIT_CHECKS_FAILED)
    assert main(["fit-decay", "--config", config, "--out", out]) == EXIT_DATA


def test_ring_command(tmp_path):
    config = _write(tmp_path, RADIAL)
    out = str(tmp_path / "ring")
    assert main(["ring", "--config", config, "--out", out]) == EXIT_OK
    with open(os.path.join(out, "ordering.csv"), encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    assert lines[1] == "eps_lower,eps_upper,worst_violation,holds"
    assert lines[2].startswith("0.2,0.1,") and lines[2].endswith(",true")

    single = _write(tmp_path, RADIAL.replace("ring_eps = 0.2, 0.1", "ring_eps = 0.2"), "single.ini")
    assert main(["ring", "--config", single, "--out", str(tmp_path / "single")]) == EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

"""
Tests for the run pipelines, decay fitting, the runner status dicts and the
run registry.
"""

import json
import os
import sys
import textwrap

import numpy as np
import pytest

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exterior_hessian.errors import InsufficientSpanError
from exterior_hessian.components.closedforms import ProblemParams, exact_solution
from exterior_hessian.components.subsolution import Ball
from exterior_hessian.components.solver import RadialGrid, SolutionField, SolveConfig, save_checkpoint
from exterior_hessian.components.levelset import capacity_pair
from exterior_hessian.components.cli.commands import EXIT_STAGE_FAILURE, exit_code
from exterior_hessian.components.cli.utilities.run_registry import RunRegistry
from exterior_hessian import runner
from exterior_hessian.pipeline import RunOptions, SequentialPipeline, Stage, capacity_checks, fit_decay
from exterior_hessian.runner import run_command


def _radial_exact(n, k, R=600.0):
    params = ProblemParams(n=n, k=k, r0=1.0, R0=4.0, eps=0.0, R=R)
    grid = RadialGrid.geometric(n, 1.0, R, 32)
    return SolutionField(values=exact_solution(params, grid.nodes), grid=grid, params=params,
                         domain=Ball(center=(0.0,) * n, radius=1.0))


# ---------------------------------------------------------------- decay fits

@pytest.mark.parametrize("n,k", [(3, 1), (5, 2), (5, 1)])
def test_fit_decay_recovers_exponents(n, k):
    rows = {row["quantity"]: row for row in fit_decay(_radial_exact(n, k))}
    assert set(rows) == {"value", "gradient", "hessian"}
    assert rows["value"]["expected_slope"] == pytest.approx(-(n - 2 * k) / k)
    assert rows["gradient"]["expected_slope"] == pytest.approx(-(n - k) / k)
    assert rows["hessian"]["expected_slope"] == pytest.approx(-n / k)
    assert all(row["within_tolerance"] for row in rows.values())


def test_fit_decay_critical_uses_green_gap():
    rows = fit_decay(_radial_exact(4, 2))
    assert rows[0]["quantity"] == "green_gap"
    assert rows[0]["fitted_slope"] == pytest.approx(0.0, abs=1e-3)
    assert all(row["within_tolerance"] for row in rows)


def test_fit_decay_needs_span():
    with pytest.raises(InsufficientSpanError):
        fit_decay(_radial_exact(3, 1, R=20.0))


# ---------------------------------------------------------------- pipeline

def test_pipeline_runs_stages_in_order():
    seen, progress = [], []
    pipeline = SequentialPipeline("demo", "two stages", [
        Stage("first", "one", lambda state: seen.append("first")),
        Stage("second", "two", lambda state: seen.append("second")),
    ])
    pipeline.run(object(), lambda step, pct: progress.append((step, pct)))
    assert seen == ["first", "second"]
    assert progress == [("first", 50), ("second", 100)]


def test_pipeline_stops_at_failing_stage():
    seen = []

    def fail(state):
        raise RuntimeError("boom")

    pipeline = SequentialPipeline("demo", "", [
        Stage("fail", "", fail),
        Stage("after", "", lambda state: seen.append("after")),
    ])
    with pytest.raises(RuntimeError):
        pipeline.run(object())
    assert seen == []


# ---------------------------------------------------------------- runner

FAILING = textwrap.dedent("""
    [problem]
    n = 5
    k = 2
    r0 = 1.0
    R0 = 4.0

    [schedules]
    eps = 0.2
    R = 600

    [solver]
    nodes_per_decade = 16
    max_iter = 1
    newton_tol = 1e-14
""")


def test_stage_failure_status(tmp_path):
    config = tmp_path / "run.ini"
    config.write_text(FAILING, encoding="utf-8")
    out = str(tmp_path / "out")
    result = run_command("solve", str(config), RunOptions(out_dir=out), run_id="failing")
    assert result["status"] == "error"
    assert result["error_type"] == "convergence"
    assert result["continuation"]["failed_stage"] == 0
    assert result["continuation"]["stages"] == []
    with open(os.path.join(out, "runs.json"), encoding="utf-8") as handle:
        runs = json.load(handle)
    assert runs["failing"]["status"] == "failed"


def test_config_error_status(tmp_path):
    config = tmp_path / "run.ini"
    config.write_text(FAILING.replace("newton_tol = 1e-14", "newton_tol = -1"), encoding="utf-8")
    result = run_command("solve", str(config), RunOptions(out_dir=str(tmp_path)))
    assert result["status"] == "error"
    assert result["error_type"] == "configuration"
    assert result["field"] == "solver.newton_tol"


def test_unexpected_stage_error_status(tmp_path, monkeypatch):
    def divide(state):
        return 1.0 / 0.0

    monkeypatch.setitem(runner.PIPELINES, "verify",
                        SequentialPipeline("verify", "", [Stage("divide", "", divide)]))
    config = tmp_path / "run.ini"
    config.write_text(FAILING, encoding="utf-8")
    out = str(tmp_path / "out")
    result = run_command("verify", str(config), RunOptions(out_dir=out), run_id="unexpected")
    assert result["status"] == "error"
    assert result["error_type"] == "internal"
    assert "ZeroDivisionError" in result["error"]
    assert exit_code(result) == EXIT_STAGE_FAILURE
    with open(os.path.join(out, "runs.json"), encoding="utf-8") as handle:
        runs = json.load(handle)
    assert runs["unexpected"]["status"] == "failed"


MONGE_AMPERE = textwrap.dedent("""
    [problem]
    n = 3
    k = 3
    r0 = 1.0
    R0 = 4.0

    [schedules]
    eps = 0.1
    R = 600

    [solver]
    nodes_per_decade = 32

    [analysis]
    b_values = 1.0
    t_grid = 1.5, 2.0, 3.0
""")


def test_verify_monge_ampere_case(tmp_path):
    config = tmp_path / "run.ini"
    config.write_text(MONGE_AMPERE, encoding="utf-8")
    out = tmp_path / "out"
    checkpoint = save_checkpoint(str(out / "checkpoint.npz"), _radial_exact(3, 3), 0, SolveConfig(), [])
    result = run_command("verify", str(config), RunOptions(out_dir=str(out), checkpoint=checkpoint))
    assert result["status"] == "success"
    assert result["checks"]["area_bound"]
    assert set(result["summary"]["max_forward_increase"]) == {"1.0"}
    assert os.path.exists(out / "series_b1.csv")


# ---------------------------------------------------------------- capacity

def test_capacity_checks_on_ball():
    field = _radial_exact(3, 1)
    checks = capacity_checks(field, capacity_pair(field))
    assert checks == {"capacity.gap": True, "capacity.ball": True}


def test_capacity_checks_fail_off_solution():
    # doubling u doubles |Du|^k H_{k−1} but quadruples S_1^{ij}u_iu_j
    field = _radial_exact(3, 1)
    doubled = field.with_values(2.0 * field.values)
    checks = capacity_checks(doubled, capacity_pair(doubled))
    assert checks == {"capacity.gap": False, "capacity.ball": False}


# ---------------------------------------------------------------- registry

def test_registry_lifecycle(tmp_path):
    path = str(tmp_path / "registry" / "runs.json")
    registry = RunRegistry(path)
    registry.create_run("r1", "solve", "run.ini")
    registry.update_progress("r1", "continuation", 50, ["a.npz"])
    assert registry.get_run("r1")["status"] == "running"
    registry.update_progress("r1", "diagnostics", 100)
    run = RunRegistry(path).get_run("r1")
    assert run["status"] == "completed"
    assert run["progress"]["steps_completed"] == ["continuation", "diagnostics"]
    assert run["reports"] == ["a.npz"]

    registry.create_run("r2", "verify", "run.ini")
    registry.set_error("r2", "checkpoint not found")
    assert RunRegistry(path).get_run("r2")["status"] == "failed"
    assert set(registry.get_all_runs()) == {"r1", "r2"}
    registry.update_progress("unknown", "x", 10)
    assert registry.get_run("unknown") is None


def test_registry_ignores_corrupt_file(tmp_path):
    path = tmp_path / "runs.json"
    path.write_text("{not json", encoding="utf-8")
    assert RunRegistry(str(path)).get_all_runs() == {}


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

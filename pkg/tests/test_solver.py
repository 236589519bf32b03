"""
Tests for the Newton solver, continuation, checkpoints and diagnostics.

For k = 1 the equation is linear and radial solutions with the truncated
boundary data are known in closed form: u = w + a + b·G(r) with G the
fundamental radial harmonic. These give exact references for both grids.
"""

import math
import os
import sys

import numpy as np
import pytest

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exterior_hessian.errors import CheckpointError, ConvergenceError, PreconditionError
from exterior_hessian.components.closedforms import ProblemParams, w_profile
from exterior_hessian.components.subsolution import Ball, GlueParams
from exterior_hessian.components.solver import (
    CartesianGrid,
    RadialGrid,
    SolutionField,
    SolveConfig,
    cone_failures,
    cone_floors,
    continue_to_limit,
    diagnostics,
    linearization,
    load_checkpoint,
    newton_step,
    ordering_report,
    radial_grid_factory,
    residual,
    ring_family,
    sample_on_axis,
    save_checkpoint,
    solve,
    solve_ring,
    subsolution_values,
)
from exterior_hessian.components.solver.utilities.discretization import NodeState

CONFIG = SolveConfig(newton_tol=1e-9, nodes_per_decade=48)


def _radial(params, npd=48):
    return RadialGrid.geometric(params.n, params.r0, params.R, npd)


def _linear_reference(params, r):
    """Radial solution of Δu = f with u(r0) = c, u(R) = w(R), for n = 3"""
    c = params.case.boundary_value
    b = (c - w_profile(params, params.r0)) / (1.0 / params.r0 - 1.0 / params.R)
    return w_profile(params, r) + b * (1.0 / r - 1.0 / params.R)


def test_geometric_grid():
    grid = RadialGrid.geometric(3, 1.0, 600.0, 16)
    ratios = grid.nodes[1:-1] / grid.nodes[:-2]
    assert grid.inner_radius == 1.0 and grid.outer_radius == 600.0
    assert np.allclose(ratios, 10 ** (1 / 16))
    shorter = RadialGrid.geometric(3, 1.0, 300.0, 16)
    common = shorter.nodes.size - 1
    assert np.array_equal(shorter.nodes[:common], grid.nodes[:common])


def test_radial_solve_matches_linear_reference():
    params = ProblemParams(n=3, k=1, r0=1.0, R0=4.0, eps=0.1, R=600.0)
    field, report = solve(params, _radial(params), CONFIG)
    assert report.converged and report.residual <= CONFIG.newton_tol
    assert report.subsolution_gap >= -1e-8
    assert np.max(np.abs(residual(field))) <= CONFIG.newton_tol
    r = field.grid.nodes
    assert np.allclose(field.values, _linear_reference(params, r), atol=2e-3)
    assert field.values[0] == -1.0
    assert field.values[-1] == pytest.approx(w_profile(params, 600.0))


@pytest.mark.parametrize("n,k", [(5, 2), (4, 2), (3, 2)])
def test_radial_solve_nonlinear_cases(n, k):
    params = ProblemParams(n=n, k=k, r0=1.0, R0=4.0, eps=0.2, R=600.0)
    field, report = solve(params, _radial(params, npd=32), CONFIG)
    assert report.converged
    summary = diagnostics(field)
    assert summary.checks["gamma_k"]
    assert summary.checks["gradient_floor"]
    assert summary.checks["subsolution"]
    assert summary.checks["barrier"]
    assert len(summary.rows) == field.grid.nodes.size - 2


def test_solve_preconditions():
    params = ProblemParams(n=3, k=1, r0=1.0, R0=4.0, eps=0.1, R=100.0)
    with pytest.raises(PreconditionError):
        solve(params, _radial(params), CONFIG)
    far = params.with_stage(R=600.0)
    with pytest.raises(PreconditionError):
        solve(far, _radial(far), CONFIG, domain=Ball(center=(0.2, 0.0, 0.0), radius=1.0))
    with pytest.raises(PreconditionError):
        solve_ring(far, _radial(far), CONFIG, eps=0.0)


def test_newton_budget_exhausted():
    params = ProblemParams(n=5, k=2, r0=1.0, R0=4.0, eps=0.2, R=600.0)
    with pytest.raises(ConvergenceError) as info:
        solve(params, _radial(params, npd=32), SolveConfig(max_iter=1, newton_tol=1e-14))
    assert info.value.report is not None and not info.value.report.converged


def test_ring_solution_and_ordering():
    params = ProblemParams(n=3, k=1, r0=1.0, R0=4.0, eps=0.1, R=600.0)
    grid = RadialGrid.geometric(3, 1.0, 10.0, 48)
    fields = ring_family(params, grid, CONFIG, [0.2, 0.1, 0.05])
    r = grid.nodes
    for field, eps in zip(fields, [0.2, 0.1, 0.05]):
        # Δu = ε: u = a + b/r + ε r²/6
        b = (1.0 - eps * (100.0 - 1.0) / 6.0) / (1.0 / 10.0 - 1.0)
        a = -b - eps / 6.0
        assert np.allclose(field.values, a + b / r + eps * r ** 2 / 6.0, atol=2e-3)
    for larger, smaller in zip(fields, fields[1:]):
        assert ordering_report(larger, smaller).holds
        assert not ordering_report(smaller, larger).holds


def test_cartesian_solve_matches_radial_reference():
    params = ProblemParams(n=2, k=1, r0=1.0, R0=2.5, eps=0.1, R=8.0)
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    grid = CartesianGrid(n=2, h=0.2, outer_radius=8.0, domain=ball)
    field, report = solve(params, grid, CONFIG, domain=ball)
    assert report.converged
    # Δu = f with u(1) = 0, u(8) = w(8): u = w − w(1)(1 − log r / log 8)
    radii = np.array([2.0, 3.0, 5.0])
    w1 = w_profile(params, 1.0)
    expected = w_profile(params, radii) - w1 * (1.0 - np.log(radii) / math.log(8.0))
    assert np.allclose(sample_on_axis(field, radii), expected, atol=0.03)


def test_checkpoint_round_trip(tmp_path):
    params = ProblemParams(n=3, k=1, r0=1.0, R0=4.0, eps=0.1, R=600.0)
    field, _ = solve(params, _radial(params, npd=16), CONFIG)
    path = save_checkpoint(str(tmp_path / "run.npz"), field, 0, CONFIG, [])
    loaded, meta = load_checkpoint(path)
    assert np.array_equal(loaded.values, field.values)
    assert np.array_equal(loaded.grid.nodes, field.grid.nodes)
    assert loaded.params == field.params and loaded.domain == field.domain
    assert meta["stage"] == 0 and meta["stages"] == []
    with pytest.raises(CheckpointError):
        load_checkpoint(str(tmp_path / "missing.npz"))
    (tmp_path / "broken.npz").write_bytes(b"not an archive")
    with pytest.raises(CheckpointError):
        load_checkpoint(str(tmp_path / "broken.npz"))


def test_continuation_and_resume(tmp_path):
    params = ProblemParams(n=3, k=1, r0=1.0, R0=4.0, eps=0.2, R=600.0)
    config = SolveConfig(eps_schedule=[0.2, 0.1, 0.05], R_schedule=[600.0, 800.0, 1000.0],
                         nodes_per_decade=16)
    checkpoint = str(tmp_path / "continuation.npz")
    field, report = continue_to_limit(params, radial_grid_factory(config), config, checkpoint=checkpoint)
    assert [s.stage for s in report.stages] == [0, 1, 2]
    assert report.stages[0].probe_delta is None
    assert all(s.probe_delta > 0 for s in report.stages[1:])
    assert field.params.eps == 0.05 and field.grid.outer_radius == 1000.0

    resumed, again = continue_to_limit(params, radial_grid_factory(config), config, checkpoint=checkpoint)
    assert len(again.stages) == 3
    assert np.array_equal(resumed.values, field.values)

    other = config.model_copy(update={"newton_tol": 1e-8})
    with pytest.raises(CheckpointError):
        continue_to_limit(params, radial_grid_factory(other), other, checkpoint=checkpoint)


def test_schedule_validation():
    with pytest.raises(ValueError):
        SolveConfig(eps_schedule=[0.1, 0.2])
    with pytest.raises(ValueError):
        SolveConfig(R_schedule=[1000.0, 900.0])
    with pytest.raises(ValueError):
        SolveConfig(eps_schedule=[0.2, 0.1], R_schedule=[600.0, 700.0, 800.0])
    assert SolveConfig(eps_schedule=[0.2, 0.1], R_schedule=[600.0]).stages() == [(0.2, 600.0), (0.1, 600.0)]

# ---------------------------------------------------------------- Newton internals

def _start_field(params, grid, domain=None):
    """Subsolution start on `grid`, as solve() builds it"""
    domain = domain or Ball(center=(0.0,) * params.n, radius=params.r0)
    template = SolutionField(values=np.zeros(grid.shape if isinstance(grid, CartesianGrid) else np.shape(grid.nodes)),
                             grid=grid, params=params, domain=domain, glue=GlueParams.for_case(params))
    return template.with_values(subsolution_values(template))


def _state(sums):
    sums = np.asarray(sums, dtype=float)
    return NodeState(sums=sums, partials=np.zeros((sums.shape[0], 1)), spectra=np.zeros((sums.shape[0], 2)))


def test_cone_floors_and_failures():
    margin = 1e-3
    # rows: regular, S_k target below the margin, below the margin at start, outside Γ_2
    current = _state([[1.0, 2e-3, 1e-2], [1.0, 2e-3, 1e-2], [1.0, 5e-4, 1e-2], [1.0, -1.0, 1e-2]])
    f = np.array([5e-3, 1e-8, 5e-3, 5e-3])
    floors = cone_floors(current, f, 2, margin)
    assert np.allclose(floors[0], [margin, margin])
    assert np.allclose(floors[1], [margin, 5e-9], rtol=1e-12, atol=0.0)
    assert np.array_equal(floors[2], [0.0, 0.0])
    assert np.all(np.isneginf(floors[3]))

    def fails(row, s1, s2):
        sums = np.tile([1.0, 1.0, 1.0], (4, 1))
        sums[row] = [1.0, s1, s2]
        return bool(cone_failures(_state(sums), floors, 2)[row])

    assert fails(0, 6e-4, -5e-10)
    assert fails(0, 6e-4, 1e-2)
    assert fails(0, 1.5e-3, 0.0)
    assert not fails(0, 1.5e-3, 2e-3)
    assert not fails(1, 1.5e-3, 1e-8)
    assert fails(1, 1.5e-3, 1e-9)
    assert not fails(2, 1e-4, 1e-4)
    assert fails(2, 0.0, 1e-4)
    assert not fails(3, -5.0, -5.0)
    assert fails(3, np.nan, 1.0)


@pytest.mark.parametrize("n,k", [(5, 2), (3, 2)])
def test_newton_iterates_stay_in_cone(n, k):
    params = ProblemParams(n=n, k=k, r0=1.0, R0=4.0, eps=0.2, R=600.0)
    config = SolveConfig(newton_tol=1e-9, nodes_per_decade=32)
    field = _start_field(params, _radial(params, npd=32))
    disc = field.discretization
    floors = cone_floors(disc.evaluate(field.unknowns, k), disc.rhs, k, config.gamma_margin)
    active = np.isfinite(floors[:, 0])
    assert active.any()
    residuals = [float(np.max(np.abs(residual(field))))]
    for _ in range(6):
        if residuals[-1] <= config.newton_tol:
            break
        field = newton_step(field, config, floors)
        sums = disc.evaluate(field.unknowns, k).sums[:, 1:k + 1]
        assert np.all(sums[active] > floors[active])
        assert np.all(sums[active] > 0.0)
        residuals.append(float(np.max(np.abs(residual(field)))))
    assert residuals[-1] < residuals[0]


@pytest.mark.parametrize("n,k", [(5, 2), (4, 2), (3, 2), (4, 3)])
def test_jacobian_matches_finite_differences(n, k):
    params = ProblemParams(n=n, k=k, r0=1.0, R0=4.0, eps=0.2, R=600.0)
    field = _start_field(params, _radial(params, npd=24))
    _check_jacobian(field, np.random.default_rng(10 * n + k))


def test_cartesian_jacobian_matches_finite_differences():
    params = ProblemParams(n=2, k=1, r0=1.0, R0=2.5, eps=0.1, R=8.0)
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    field = _start_field(params, CartesianGrid(n=2, h=0.25, outer_radius=8.0, domain=ball), ball)
    _check_jacobian(field, np.random.default_rng(3))


def _check_jacobian(field, rng):
    disc = field.discretization
    u = field.unknowns
    _, J = linearization(field)
    for _ in range(3):
        v = rng.standard_normal(u.size)
        h = 1e-6
        plus = residual(field.with_values(disc.full_values(u + h * v)))
        minus = residual(field.with_values(disc.full_values(u - h * v)))
        directional = J @ v
        fd = (plus - minus) / (2 * h)
        assert np.linalg.norm(fd - directional) <= 1e-5 * np.linalg.norm(directional)


# ---------------------------------------------------------------- convergence and comparison

def test_radial_mesh_convergence_is_second_order():
    params = ProblemParams(n=3, k=1, r0=1.0, R0=4.0, eps=0.1, R=1000.0)
    config = SolveConfig(newton_tol=1e-11)
    errors = []
    for npd in (32, 64):
        field, _ = solve(params, _radial(params, npd=npd), config)
        r = field.grid.nodes
        errors.append(float(np.max(np.abs(field.values - _linear_reference(params, r)))))
    order = math.log2(errors[0] / errors[1])
    assert order >= 1.9


def test_exterior_solutions_increase_with_R():
    base = ProblemParams(n=3, k=1, r0=1.0, R0=4.0, eps=0.1, R=600.0)
    fields = []
    for R in (600.0, 800.0, 1000.0):
        params = base.with_stage(R=R)
        fields.append(solve(params, _radial(params, npd=32), CONFIG)[0])
    for smaller, larger in zip(fields, fields[1:]):
        assert ordering_report(smaller, larger).holds
        assert not ordering_report(larger, smaller).holds


def test_cartesian_comparison_with_ordered_rhs():
    params = ProblemParams(n=2, k=1, r0=1.0, R0=2.5, eps=0.1, R=8.0)
    ball = Ball(center=(0.0, 0.0), radius=1.0)
    grid = CartesianGrid(n=2, h=0.25, outer_radius=4.0, domain=ball)
    larger, smaller = ring_family(params, grid, CONFIG, [0.2, 0.1], domain=ball)
    assert ordering_report(larger, smaller).holds
    assert not ordering_report(smaller, larger).holds



if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

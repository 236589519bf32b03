"""
ε ↓ 0, R ↑ ∞ continuation: a sequence of truncated solves, each warm-started
from the previous stage, with probe values tracked on a fixed annulus.
"""
import logging
import os
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from exterior_hessian.errors import (
    CheckpointError,
    ConfigurationError,
    ConvergenceError,
    HessianError,
    PreconditionError,
)
from exterior_hessian.components.closedforms import ProblemParams, w_profile
from exterior_hessian.components.subsolution import Ball, GlueParams
from .engine import solve, solve_ring
from .types import (
    CartesianGrid,
    ContinuationReport,
    RadialGrid,
    SolutionField,
    SolveConfig,
    StageRecord,
)
from .utilities.checkpoint import config_digest, load_checkpoint, save_checkpoint
from .utilities.interpolation import sample_on_axis, sample_points

logger = logging.getLogger(__name__)

GridFactory = Callable[[ProblemParams], object]

PROBE_COUNT = 8


def radial_grid_factory(config: SolveConfig) -> GridFactory:
    def factory(params: ProblemParams) -> RadialGrid:
        return RadialGrid.geometric(params.n, params.r0, params.R, config.nodes_per_decade)
    return factory


def cartesian_grid_factory(config: SolveConfig, domain) -> GridFactory:
    if config.grid_spacing is None:
        raise PreconditionError("Cartesian continuation needs grid_spacing")

    def factory(params: ProblemParams) -> CartesianGrid:
        return CartesianGrid(n=params.n, h=config.grid_spacing, outer_radius=params.R, domain=domain)
    return factory


def default_probe_radii(params: ProblemParams, domain, R: float) -> np.ndarray:
    """geomspace(1.5·r0, 10·r0) kept strictly between ∂Ω and ∂B_R"""
    radii = np.geomspace(1.5 * params.r0, 10.0 * params.r0, PROBE_COUNT)
    _, r_out = domain.bounding_radii
    lo = max(r_out, params.r0) * 1.0001
    kept = radii[(radii > lo) & (radii < R)]
    if kept.size == 0:
        kept = np.geomspace(lo, 0.5 * (lo + R), PROBE_COUNT)
    return kept


def warm_start(previous: SolutionField, template: SolutionField) -> np.ndarray:
    """Previous stage values carried to a new grid; the new outer annulus starts from w"""
    disc = template.discretization
    points = disc.points
    radius = np.linalg.norm(points, axis=-1)
    values = np.asarray(
        w_profile(template.params, radius) if template.kind == "exterior"
        else np.ones_like(radius), dtype=float)
    covered = radius < previous.grid.outer_radius
    values[covered] = sample_points(previous, points[covered])
    return disc.full_values(values)


def _template(params: ProblemParams, grid, domain, glue, kind: str, ring_eps: Optional[float]) -> SolutionField:
    shape = np.shape(grid.nodes) if isinstance(grid, RadialGrid) else grid.shape
    return SolutionField(values=np.zeros(shape), grid=grid, params=params, domain=domain, glue=glue,
                         kind=kind, ring_eps=ring_eps)


def continue_to_limit(params: ProblemParams, grid_factory: GridFactory, config: SolveConfig,
                      domain=None, glue: Optional[GlueParams] = None,
                      probe_radii: Optional[Sequence[float]] = None,
                      checkpoint: Optional[str] = None,
                      resume: bool = True) -> Tuple[SolutionField, ContinuationReport]:
    """
    Run the truncated solves along config.stages().

    Args:
        params: base parameters; ε and R are replaced stage by stage
        grid_factory: builds the grid for the parameters of a stage
        config: Newton and schedule settings
        domain: Ω; radial grids default to B_{r0}
        glue: subsolution gluing parameters, case defaults when omitted
        probe_radii: radii r at which u(r·e₁) is tracked between stages
        checkpoint: file written after every stage
        resume: continue from `checkpoint` when it exists

    Returns:
        (final field, report)

    Raises:
        ConvergenceError: a stage failed; `report` carries the stages completed so far
    """
    stages = config.stages()
    report = ContinuationReport()
    previous: Optional[SolutionField] = None
    first = 0

    if checkpoint and resume and os.path.exists(checkpoint):
        previous, meta = load_checkpoint(checkpoint)
        if meta["config"] != config_digest(config):
            raise CheckpointError(f"checkpoint {checkpoint} was written with a different solver config")
        report.stages = list(meta["stages"])
        first = int(meta["stage"]) + 1
        domain = previous.domain
        logger.info(f"[*] Resuming from {checkpoint} after stage {meta['stage']}")

    if domain is None:
        first_grid = grid_factory(params.with_stage(*stages[0]))
        domain = first_grid.domain if isinstance(first_grid, CartesianGrid) \
            else Ball(center=(0.0,) * params.n, radius=first_grid.inner_radius)
    radii = np.asarray(probe_radii if probe_radii is not None
                       else default_probe_radii(params, domain, stages[0][1]), dtype=float)
    report.probe_radii = radii.tolist()
    previous_probes = np.asarray(report.stages[-1].probe_values) if report.stages else None

    for index in range(first, len(stages)):
        eps, R = stages[index]
        stage_params = params.with_stage(eps=eps, R=R)
        logger.info(f"[STAGE] {index + 1}/{len(stages)}: eps={eps:g}, R={R:g}")
        try:
            grid = grid_factory(stage_params)
            initial = None
            if previous is not None:
                template = _template(stage_params, grid, domain, glue or GlueParams.for_case(stage_params),
                                     "exterior", None)
                initial = warm_start(previous, template)
            field, solve_report = solve(stage_params, grid, config, domain=domain, glue=glue, initial=initial)
        except ConfigurationError:
            raise
        except HessianError as e:
            report.failed_stage = index
            report.error = str(e)
            logger.error(f"[!] Stage {index + 1} failed: {str(e)}")
            raise ConvergenceError(f"continuation stage {index + 1} failed: {str(e)}", report=report) from e

        probes = sample_on_axis(field, radii)
        delta = None if previous_probes is None else float(np.max(np.abs(probes - previous_probes)))
        report.stages.append(StageRecord(
            stage=index, eps=eps, R=R, iterations=solve_report.iterations, residual=solve_report.residual,
            probe_delta=delta, probe_values=probes.tolist(), converged=solve_report.converged))
        logger.info(f"[STAGE] {index + 1} done: {solve_report.iterations} iterations, "
                    f"probe delta {'n/a' if delta is None else f'{delta:.3e}'}")
        previous, previous_probes = field, probes
        if checkpoint:
            save_checkpoint(checkpoint, field, index, config, report.stages)

    last_delta = report.stages[-1].probe_delta if report.stages else None
    report.limit_converged = last_delta is not None and last_delta < 10.0 * config.newton_tol
    if report.limit_converged:
        logger.info("[+] Continuation limit converged on the probe annulus")
    return previous, report


def ring_family(params: ProblemParams, grid, config: SolveConfig, eps_values: Sequence[float],
                domain=None, glue: Optional[GlueParams] = None) -> List[SolutionField]:
    """Ring solutions for each ε, each warm-started from the previous one"""
    fields: List[SolutionField] = []
    initial = None
    for eps in eps_values:
        logger.info(f"[STAGE] ring eps={eps:g}")
        field, _ = solve_ring(params, grid, config, eps, domain=domain, glue=glue, initial=initial)
        fields.append(field)
        initial = field.values
    return fields

"""
Damped Newton iteration for S_k(D²u) = f on annular grids.

The linearization is the discrete operator Σ S_k^{ij}(D²u)(D²δu)_{ij}. With
the "concave" formulation the same operator is driven by the right-hand side
k·S_k^{(k−1)/k}(S_k^{1/k} − f^{1/k}), which agrees with S_k − f to first order
and keeps the iteration inside Γ_k more reliably far from the solution.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from exterior_hessian.errors import ConvergenceError, PreconditionError
from exterior_hessian.components.closedforms import ProblemParams
from exterior_hessian.components.subsolution import (
    Ball,
    GlueParams,
    build_ring_subsolution,
    build_subsolution,
    check_glue,
    check_ring_glue,
)
from .types import (
    CartesianGrid,
    NewtonRecord,
    OrderingReport,
    RadialGrid,
    SolutionField,
    SolveConfig,
    SolveReport,
)
from .utilities.discretization import NodeState
from .utilities.interpolation import sample_points

logger = logging.getLogger(__name__)

SUBSOLUTION_TOL = 1e-8
ORDERING_TOL = 1e-8


def hessian_at(field: SolutionField, node):
    """Discrete Hessian at a grid node: a Spectrum (radial node index) or a SymMatrix (Cartesian multi-index)"""
    return field.discretization.hessian_at(field.values, node)


def residual(field: SolutionField) -> np.ndarray:
    """S_k(D²u) − f at every unknown node"""
    disc = field.discretization
    state = disc.evaluate(field.unknowns, field.params.k)
    return state.sums[:, -1] - disc.rhs


def linearization(field: SolutionField):
    """(S_k − f, Jacobian) at the unknowns"""
    disc = field.discretization
    state = disc.evaluate(field.unknowns, field.params.k)
    return state.sums[:, -1] - disc.rhs, disc.jacobian(state.partials)


def _newton_rhs(S: np.ndarray, f: np.ndarray, k: int, formulation: str) -> Tuple[np.ndarray, np.ndarray]:
    """(linear right-hand side, merit vector)"""
    r = S - f
    if formulation == "hessian" or k == 1:
        return r, r
    gap = np.sign(S) * np.abs(S) ** (1.0 / k) - np.maximum(f, 0.0) ** (1.0 / k)
    concave = k * np.abs(S) ** ((k - 1.0) / k) * gap
    return np.where(S > 0.0, concave, r), gap


def cone_floors(state: NodeState, f: np.ndarray, k: int, margin: float) -> np.ndarray:
    """
    Per-node lower bounds on S_1..S_k that every accepted iterate must exceed.

    S_1..S_{k−1} are held above `margin` and S_k above min(margin, f/2), so the
    target S_k = f stays admissible where f is below the margin. Nodes that
    already miss these bounds keep the exact sign test (floor 0); nodes outside
    Γ_k get −inf and are exempt. The floors are fixed for the whole solve.
    """
    floors = np.full((f.size, k), float(margin))
    floors[:, -1] = np.minimum(margin, 0.5 * np.maximum(f, 0.0))
    sums = state.sums[:, 1:k + 1]
    floors[~np.all(sums > floors, axis=1)] = 0.0
    floors[~np.all(sums > 0.0, axis=1)] = -np.inf
    return floors


def cone_failures(trial: NodeState, floors: np.ndarray, k: int) -> np.ndarray:
    """Unknowns at which the trial iterate leaves Γ_k with the given floors"""
    sums = trial.sums[:, 1:k + 1]
    return np.any(~np.isfinite(sums) | (sums <= floors), axis=1)


def _newton_update(field: SolutionField, state: NodeState, floors: np.ndarray,
                   config: SolveConfig, iteration: int):
    disc = field.discretization
    k = field.params.k
    u = field.unknowns
    S = state.sums[:, k]
    rhs, merit_vec = _newton_rhs(S, disc.rhs, k, config.formulation)
    merit = float(np.max(np.abs(merit_vec)))

    delta = disc.solve_linear(disc.jacobian(state.partials), -rhs, config)

    length = 1.0
    failing = np.zeros(u.size, dtype=bool)
    for _ in range(config.max_backtracks + 1):
        trial_u = u + length * delta
        trial = disc.evaluate(trial_u, k)
        failing = cone_failures(trial, floors, k)
        if not failing.any():
            trial_S = trial.sums[:, k]
            trial_res = float(np.max(np.abs(trial_S - disc.rhs)))
            trial_merit = float(np.max(np.abs(_newton_rhs(trial_S, disc.rhs, k, config.formulation)[1])))
            if trial_merit < merit or trial_res <= config.newton_tol:
                record = NewtonRecord(
                    iteration=iteration,
                    residual=trial_res,
                    merit=trial_merit,
                    step_length=length,
                    step_norm=float(length * np.max(np.abs(delta))),
                    flagged_nodes=int(np.count_nonzero(np.isneginf(floors[:, 0]))),
                )
                return field.with_values(disc.full_values(trial_u)), trial, record
        length *= config.damping

    diagnostics = {"iteration": iteration, "merit": merit, "step_length": length}
    if failing.any():
        node = int(np.argmax(failing))
        diagnostics.update({"node": node, "radius": float(disc.node_radii()[node])})
        message = (f"backtracking exhausted: Γ_k fails at unknown {node} "
                   f"(|x| = {diagnostics['radius']:.6g})")
    else:
        message = "backtracking exhausted: no decrease of the residual"
    raise ConvergenceError(message, diagnostics=diagnostics)


def newton_step(field: SolutionField, config: SolveConfig,
                floors: Optional[np.ndarray] = None) -> SolutionField:
    """
    One damped Newton step with zero boundary increment.

    `floors` are the cone bounds of the solve (see cone_floors); they are taken
    from `field` itself when omitted.
    """
    disc = field.discretization
    k = field.params.k
    state = disc.evaluate(field.unknowns, k)
    if floors is None:
        floors = cone_floors(state, disc.rhs, k, config.gamma_margin)
    return _newton_update(field, state, floors, config, 1)[0]


def _iterate(field: SolutionField, config: SolveConfig) -> Tuple[SolutionField, SolveReport]:
    disc = field.discretization
    k = field.params.k
    state = disc.evaluate(field.unknowns, k)
    floors = cone_floors(state, disc.rhs, k, config.gamma_margin)
    flagged = np.isneginf(floors[:, 0])
    borrowed = 0
    if config.gamma_margin > 0:
        borrowed = int(np.count_nonzero(np.all(floors == 0.0, axis=1) & (disc.rhs > 0.0)))
    if flagged.any():
        logger.warning(f"[!] {int(np.count_nonzero(flagged))} nodes outside Γ_k at the initial iterate; "
                       f"exempt from the cone test")
    if borrowed:
        logger.warning(f"[!] {borrowed} nodes below the Γ_k margin at the initial iterate; sign test only")

    history = []
    res = float(np.max(np.abs(state.sums[:, k] - disc.rhs)))
    iteration = 0
    while res > config.newton_tol and iteration < config.max_iter:
        iteration += 1
        try:
            field, state, record = _newton_update(field, state, floors, config, iteration)
        except ConvergenceError as e:
            e.report = SolveReport(converged=False, iterations=iteration, residual=res, history=history,
                                   flagged_nodes=np.nonzero(flagged)[0].tolist())
            raise
        history.append(record)
        res = record.residual
        logger.debug(f"[*] Newton {iteration}: residual={res:.3e} step={record.step_norm:.3e} "
                     f"length={record.step_length:.3g}")

    report = SolveReport(converged=res <= config.newton_tol, iterations=iteration, residual=res,
                         history=history, flagged_nodes=np.nonzero(flagged)[0].tolist())
    if not report.converged:
        raise ConvergenceError(f"Newton did not converge in {config.max_iter} iterations "
                               f"(residual {res:.3e})", report=report)
    return field, report


def subsolution_values(template: SolutionField) -> np.ndarray:
    """The subsolution sampled on the template's grid, Dirichlet data on the boundary"""
    disc = template.discretization
    if template.kind == "ring":
        values = build_ring_subsolution(template.domain, template.grid.outer_radius, template.glue, disc.points)
    else:
        values = build_subsolution(template.params, template.domain, template.glue, disc.points)
    return disc.full_values(np.asarray(values, dtype=float).reshape(-1))


def _default_domain(params: ProblemParams, grid) -> Ball:
    if isinstance(grid, RadialGrid):
        return Ball(center=(0.0,) * params.n, radius=grid.inner_radius)
    return grid.domain


def _check_grid(params: ProblemParams, grid, domain, exterior: bool) -> None:
    if grid.n != params.n:
        raise PreconditionError(f"grid dimension {grid.n} differs from n={params.n}")
    if isinstance(grid, RadialGrid):
        if not isinstance(domain, Ball) or any(c != 0.0 for c in domain.center) \
                or not np.isclose(domain.radius, grid.inner_radius, rtol=1e-12):
            raise PreconditionError("radial grids need Ω = B_{r0} centred at the origin")
    elif isinstance(grid, CartesianGrid) and grid.domain != domain:
        raise PreconditionError("Cartesian grid was built for a different domain")
    if exterior:
        if not np.isclose(grid.outer_radius, params.R, rtol=1e-12):
            raise PreconditionError(f"grid outer radius {grid.outer_radius} differs from R={params.R}")
        if isinstance(grid, RadialGrid) and not params.far_truncation:
            raise PreconditionError(f"radial truncation needs R > 100(R0 + 1), got R={params.R}")
        if not params.R >= 3.0 * params.R0:
            raise PreconditionError(f"truncation radius R={params.R} must be at least 3·R0")


def _run(template: SolutionField, config: SolveConfig,
         initial: Optional[np.ndarray]) -> Tuple[SolutionField, SolveReport]:
    sub = subsolution_values(template)
    start = sub if initial is None else template.discretization.full_values(
        template.discretization.unknown_values(initial))
    field, report = _iterate(template.with_values(start), config)

    gap = float(np.min(field.unknowns - template.discretization.unknown_values(sub)))
    report = report.model_copy(update={"subsolution_gap": gap})
    if gap < -SUBSOLUTION_TOL:
        logger.warning(f"[!] solution drops below the subsolution by {-gap:.3e}")
    logger.info(f"[+] {template.kind} solve converged: {report.iterations} iterations, "
                f"residual {report.residual:.3e}")
    return field, report


def solve(params: ProblemParams, grid, config: SolveConfig, domain=None,
          glue: Optional[GlueParams] = None,
          initial: Optional[np.ndarray] = None) -> Tuple[SolutionField, SolveReport]:
    """
    Solve S_k(D²u) = f^{ε} in B_R \\ Ω̄ with u = c on ∂Ω and u = w on ∂B_R.

    Args:
        params: problem parameters at this stage (ε, R)
        grid: radial or Cartesian grid with outer radius R
        config: Newton settings
        domain: Ω; radial grids default to B_{r0}
        glue: subsolution gluing parameters, case defaults when omitted
        initial: full grid values to start from (warm start); the subsolution otherwise

    Returns:
        (converged field, report)

    Raises:
        ConvergenceError: Newton or its line search failed
        NumericalError: linear solve failure
    """
    domain = domain if domain is not None else _default_domain(params, grid)
    _check_grid(params, grid, domain, exterior=True)
    glue = glue or GlueParams.for_case(params)
    check_glue(params, domain, glue)
    template = SolutionField(values=np.zeros(np.shape(grid.nodes) if isinstance(grid, RadialGrid) else grid.shape),
                             grid=grid, params=params, domain=domain, glue=glue)
    return _run(template, config, initial)


def solve_ring(params: ProblemParams, grid, config: SolveConfig, eps: float, domain=None,
               glue: Optional[GlueParams] = None,
               initial: Optional[np.ndarray] = None) -> Tuple[SolutionField, SolveReport]:
    """S_k(D²u) = ε in B_R \\ Ω̄ with u = 0 on ∂Ω and u = 1 on ∂B_R"""
    if eps <= 0:
        raise PreconditionError("ring mode needs ε > 0")
    domain = domain if domain is not None else _default_domain(params, grid)
    _check_grid(params, grid, domain, exterior=False)
    glue = glue or GlueParams.for_ring(domain, grid.outer_radius)
    check_ring_glue(domain, grid.outer_radius, glue)
    template = SolutionField(values=np.zeros(np.shape(grid.nodes) if isinstance(grid, RadialGrid) else grid.shape),
                             grid=grid, params=params, domain=domain, glue=glue, kind="ring", ring_eps=eps)
    return _run(template, config, initial)


def ordering_report(lower: SolutionField, upper: SolutionField, tol: float = ORDERING_TOL) -> OrderingReport:
    """Nodewise lower ≤ upper over the unknowns of `lower` that lie inside upper's region"""
    disc = lower.discretization
    points = disc.points
    inside = np.linalg.norm(points, axis=-1) <= upper.grid.outer_radius
    difference = np.full(disc.size, -np.inf)
    difference[inside] = lower.unknowns[inside] - sample_points(upper, points[inside])
    index = int(np.argmax(difference))
    worst = float(difference[index])
    return OrderingReport(holds=worst <= tol, worst_violation=worst, worst_index=index)


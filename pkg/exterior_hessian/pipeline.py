"""
Sequential run pipelines: continuation → diagnostics for `solve`, and
checkpoint → level-set analysis for `verify`, `fit-decay` and `ring`.

Each stage reads and extends one RunState; a stage raises on failure and the
pipeline stops there.
"""
import logging
import os
from typing import Any, Callable, Dict, List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from exterior_hessian.errors import ConfigurationError, ConvergenceError, InsufficientSpanError
from exterior_hessian.components.cli.types import RunConfig
from exterior_hessian.components.closedforms import CaseKind, ball_capacity, decay_exponents, green
from exterior_hessian.components.subsolution import Ball
from exterior_hessian.components.levelset import (
    area_bound_series,
    capacity_pair,
    inequality_report,
    monotone_series,
    write_decay_csv,
    write_diagnostics_csv,
    write_inequality_csv,
    write_ordering_csv,
    write_series_csv,
)
from exterior_hessian.components.solver import (
    RadialGrid,
    continue_to_limit,
    diagnostics,
    load_checkpoint,
    node_derivatives,
    ordering_report,
    ring_family,
)

logger = logging.getLogger(__name__)

DECAY_TOLERANCE = 0.05
DECAY_WINDOW = 0.2
MIN_DECAY_DECADES = 1.5
DECAY_SHELLS = 24
CAPACITY_TOLERANCE = 0.05


class RunOptions(BaseModel):
    """Command-line overrides of a RunConfig"""
    checkpoint: Optional[str] = None
    out_dir: Optional[str] = None
    force: bool = False
    threads: Optional[int] = Field(default=None, ge=1)
    probe_radii: Optional[List[float]] = None


class RunState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: RunConfig
    out_dir: str
    checkpoint: str
    force: bool = False
    threads: int = 1
    probe_radii: Optional[List[float]] = None
    field: Any = None
    continuation: Any = None
    diagnostics: Any = None
    reports: List[str] = Field(default_factory=list, description="Report files written so far")
    checks: Dict[str, bool] = Field(default_factory=dict, description="Aggregated pass/fail flags")
    summary: Dict[str, Any] = Field(default_factory=dict)

    def report_path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)


class Stage(NamedTuple):
    name: str
    description: str
    run: Callable[[RunState], None]


class SequentialPipeline:
    def __init__(self, name: str, description: str, stages: List[Stage]):
        self.name = name
        self.description = description
        self.stages = stages

    def run(self, state: RunState, progress: Optional[Callable[[str, int], None]] = None) -> RunState:
        """Run every stage in order; `progress(stage, percentage)` fires after each one"""
        total = len(self.stages)
        for index, stage in enumerate(self.stages, start=1):
            logger.info(f"[*] {self.name}: {stage.name} ({stage.description})")
            stage.run(state)
            logger.info(f"[+] {self.name}: {stage.name} completed")
            if progress is not None:
                progress(stage.name, int(100 * index / total))
        return state


# ---------------------------------------------------------------- stages

def _continuation(state: RunState) -> None:
    config = state.config
    params = config.base_params()
    try:
        field, report = continue_to_limit(
            params, config.grid_factory(), config.solve_config(),
            domain=config.domain_model(), glue=config.glue(params),
            probe_radii=state.probe_radii or config.analysis.probe_radii,
            checkpoint=state.checkpoint, resume=not state.force)
    except ConvergenceError as e:
        state.continuation = e.report
        raise
    state.field, state.continuation = field, report
    state.reports.append(state.checkpoint)
    state.summary["stages"] = len(report.stages)
    state.summary["limit_converged"] = report.limit_converged
    state.summary["probe_values"] = report.stages[-1].probe_values if report.stages else []


def _diagnostics(state: RunState) -> None:
    report = diagnostics(state.field)
    state.diagnostics = report
    state.reports.append(write_diagnostics_csv(state.report_path("diagnostics.csv"), report, state.force))
    state.checks.update({f"diagnostics.{name}": ok for name, ok in report.checks.items()})
    state.summary["diagnostics"] = report.summary


def _load(state: RunState) -> None:
    field, meta = load_checkpoint(state.checkpoint)
    if field.kind != "exterior":
        raise ConfigurationError(f"checkpoint holds a {field.kind} solution", field="analysis.checkpoint")
    state.field = field
    state.summary["checkpoint_stage"] = int(meta["stage"])
    logger.info(f"[*] Loaded {state.checkpoint}: stage {meta['stage']}, eps={field.params.eps:g}, "
                f"R={field.params.R:g}")


def _inequality(state: RunState) -> None:
    analysis = state.config.analysis
    reports = [inequality_report(state.field, b, resolution=analysis.boundary_resolution)
               for b in analysis.b_values]
    if not reports:
        return
    state.reports.append(write_inequality_csv(state.report_path("inequality.csv"), reports, state.force))
    state.summary["inequality_slack"] = {repr(r.b): r.slack for r in reports}
    for r in reports:
        if r.passed is not None:
            state.checks[f"inequality.b={r.b:g}"] = r.passed


def _series(state: RunState) -> None:
    analysis = state.config.analysis
    if not analysis.t_grid or not analysis.b_values:
        return
    areas = area_bound_series(state.field, analysis.t_grid, threads=state.threads)
    state.checks["area_bound"] = areas.bounded
    increases = {}
    for b in analysis.b_values:
        series = monotone_series(state.field, b, analysis.t_grid, threads=state.threads)
        increases[repr(b)] = series.max_forward_increase
        state.reports.append(write_series_csv(state.report_path(f"series_b{b:g}.csv"), series, areas.rows,
                                              state.force))
    state.summary["max_forward_increase"] = increases


def capacity_checks(field, pair, tolerance: float = CAPACITY_TOLERANCE) -> Dict[str, bool]:
    """
    Relative gap between the volume and boundary forms of the capacity, and
    on Ω = B_{r0} at the origin the boundary form against the ball value.
    """
    scale = max(abs(pair.boundary), np.finfo(float).tiny)
    checks = {"capacity.gap": bool(np.isfinite(pair.volume) and pair.gap <= tolerance * scale)}
    domain = field.domain
    if isinstance(domain, Ball) and not any(domain.center) and np.isclose(domain.radius, field.params.r0):
        expected = ball_capacity(field.params)
        checks["capacity.ball"] = bool(abs(pair.boundary - expected) <= tolerance * expected)
    return checks


def _capacity(state: RunState) -> None:
    if state.field.params.case != CaseKind.SUBCRITICAL:
        return
    pair = capacity_pair(state.field, state.config.analysis.boundary_resolution)
    state.summary["capacity"] = {"volume": pair.volume, "boundary": pair.boundary, "gap": pair.gap}
    state.checks.update(capacity_checks(state.field, pair))


def _shell_means(radial: bool, radii: np.ndarray, quantities: List[np.ndarray]) -> List[np.ndarray]:
    """Geometric-shell averages; radial grids keep one shell per node"""
    if radial:
        order = np.argsort(radii)
        return [radii[order]] + [q[order] for q in quantities]
    edges = np.geomspace(radii.min(), radii.max() * (1.0 + 1e-12), DECAY_SHELLS + 1)
    labels = np.clip(np.searchsorted(edges, radii, side="right") - 1, 0, DECAY_SHELLS - 1)
    kept = [j for j in range(DECAY_SHELLS) if np.any(labels == j)]
    return [np.array([np.mean(a[labels == j]) for j in kept]) for a in [radii] + quantities]


def fit_decay(field, tolerance: float = DECAY_TOLERANCE) -> List[Dict[str, Any]]:
    """
    Log–log slopes of |u|, |Du| and |D²u| over the middle of the radial span.

    The innermost and outermost 20% of log-radius are left out. In the Critical
    case the value row fits u − log(|x|/r0) against log|x| and expects slope 0.

    Raises:
        InsufficientSpanError: fewer than 1.5 decades between the inner and outer radius
    """
    params = field.params
    radii, u, grad, spectra = node_derivatives(field)
    norms = [u, np.linalg.norm(grad, axis=-1), np.max(np.abs(spectra), axis=-1)]
    radii, u, grad_norm, hess_norm = _shell_means(isinstance(field.grid, RadialGrid), radii, norms)
    log_r = np.log(radii)
    decades = (log_r[-1] - log_r[0]) / np.log(10.0)
    if decades < MIN_DECAY_DECADES:
        raise InsufficientSpanError(f"radial span {decades:.2f} decades, need {MIN_DECAY_DECADES}")
    lo = log_r[0] + DECAY_WINDOW * (log_r[-1] - log_r[0])
    hi = log_r[-1] - DECAY_WINDOW * (log_r[-1] - log_r[0])
    window = (log_r >= lo) & (log_r <= hi)

    value_slope, gradient_slope, hessian_slope = decay_exponents(params)
    rows = []
    if params.case == CaseKind.CRITICAL:
        drift = float(np.polyfit(log_r[window], (u - green(params, radii))[window], 1)[0])
        rows.append({"quantity": "green_gap", "fitted_slope": drift, "expected_slope": 0.0,
                     "relative_error": abs(drift), "within_tolerance": bool(abs(drift) <= tolerance)})
    else:
        rows.append(_fit_row("value", log_r[window], np.abs(u[window]), value_slope, tolerance))
    rows.append(_fit_row("gradient", log_r[window], grad_norm[window], gradient_slope, tolerance))
    rows.append(_fit_row("hessian", log_r[window], hess_norm[window], hessian_slope, tolerance))
    return rows


def _fit_row(name: str, log_r: np.ndarray, quantity: np.ndarray, expected: float,
             tolerance: float) -> Dict[str, Any]:
    slope = float(np.polyfit(log_r, np.log(quantity), 1)[0])
    error = abs(slope - expected) / abs(expected)
    logger.info(f"[*] Decay fit {name}: slope {slope:.4f}, expected {expected:.4f}")
    return {"quantity": name, "fitted_slope": slope, "expected_slope": expected,
            "relative_error": error, "within_tolerance": bool(error <= tolerance)}


def _decay(state: RunState) -> None:
    rows = fit_decay(state.field)
    state.reports.append(write_decay_csv(state.report_path("decay.csv"), rows, state.force))
    state.checks.update({f"decay.{row['quantity']}": row["within_tolerance"] for row in rows})


def _ring(state: RunState) -> None:
    config = state.config
    eps_values = sorted(config.analysis.ring_eps)
    if len(eps_values) < 2:
        raise ConfigurationError("ring mode needs at least two values", field="analysis.ring_eps")
    params = config.base_params().with_stage(R=config.schedules.R[-1])
    grid = config.grid_factory()(params)
    domain = config.domain_model()
    fields = ring_family(params, grid, config.solve_config(), eps_values, domain=domain,
                         glue=config.ring_glue(domain, grid.outer_radius))
    rows = []
    for (eps_small, small), (eps_large, large) in zip(zip(eps_values, fields), zip(eps_values[1:], fields[1:])):
        # larger ε pushes the solution down
        report = ordering_report(large, small)
        rows.append({"eps_lower": eps_large, "eps_upper": eps_small,
                     "worst_violation": report.worst_violation, "holds": report.holds})
        state.checks[f"ordering.{eps_large:g}<={eps_small:g}"] = report.holds
    state.field = fields[-1]
    state.reports.append(write_ordering_csv(state.report_path("ordering.csv"), rows, state.force))


solve_pipeline = SequentialPipeline(
    name="solve",
    description="ε ↓ 0, R ↑ ∞ continuation followed by a priori diagnostics",
    stages=[
        Stage("continuation", "truncated solves along the schedules", _continuation),
        Stage("diagnostics", "shell bounds and barriers", _diagnostics),
    ],
)

verify_pipeline = SequentialPipeline(
    name="verify",
    description="boundary inequality, monotone quantity, area growth and capacity of a stored solution",
    stages=[
        Stage("load", "read the checkpoint", _load),
        Stage("inequality", "boundary inequality for each b", _inequality),
        Stage("series", "monotone and area series over the t grid", _series),
        Stage("capacity", "volume against boundary capacity", _capacity),
    ],
)

decay_pipeline = SequentialPipeline(
    name="fit-decay",
    description="log-log decay exponents of a stored solution",
    stages=[
        Stage("load", "read the checkpoint", _load),
        Stage("decay", "fit value, gradient and Hessian slopes", _decay),
    ],
)

ring_pipeline = SequentialPipeline(
    name="ring",
    description="bounded-ring family and its ordering in ε",
    stages=[Stage("ring", "ring solves and nodewise ordering", _ring)],
)

PIPELINES = {p.name: p for p in (solve_pipeline, verify_pipeline, decay_pipeline, ring_pipeline)}

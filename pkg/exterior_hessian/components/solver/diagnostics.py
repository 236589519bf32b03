"""
A priori bounds of truncated solutions evaluated on a converged field.

Nothing here raises on a violated bound; violations show up as False entries
in DiagnosticsReport.checks.
"""
import logging
from typing import Dict, List, Optional

import numpy as np

from exterior_hessian.errors import DomainError
from exterior_hessian.components.closedforms import (
    CaseKind,
    gradient_weight,
    green,
    outer_barrier,
    upper_barrier,
)
from exterior_hessian.components.subsolution import build_subsolution
from exterior_hessian.components.symfun import elementary_symmetric
from .types import DiagnosticsReport, RadialGrid, ShellRow, SolutionField

logger = logging.getLogger(__name__)

CARTESIAN_SHELLS = 24


def node_derivatives(field: SolutionField):
    """(radii, u, Du, spectra) at the unknown nodes"""
    disc = field.discretization
    u = field.unknowns
    comps = disc.components(u)
    if isinstance(field.grid, RadialGrid):
        grad = np.zeros((disc.size, field.grid.n))
        grad[:, 0] = comps[:, 1] * disc.radii
        return disc.radii, u, grad, disc.spectra(comps)
    gradients = np.gradient(field.values, field.grid.h)
    grad = np.stack([g[disc.unknown] for g in gradients], axis=-1)
    return disc.radii, u, grad, disc.spectra(comps)


def _shells(field: SolutionField, radii: np.ndarray) -> List[np.ndarray]:
    if isinstance(field.grid, RadialGrid):
        return [np.array([i]) for i in range(radii.size)]
    edges = np.geomspace(radii.min(), radii.max() * (1.0 + 1e-12), CARTESIAN_SHELLS + 1)
    labels = np.clip(np.searchsorted(edges, radii, side="right") - 1, 0, CARTESIAN_SHELLS - 1)
    return [np.nonzero(labels == j)[0] for j in range(CARTESIAN_SHELLS) if np.any(labels == j)]


def _sub(values: Optional[np.ndarray], index: np.ndarray, reduce) -> Optional[float]:
    return None if values is None else float(reduce(values[index]))


def diagnostics(field: SolutionField, tol: float = 1e-3, subsolution_tol: float = 1e-8) -> DiagnosticsReport:
    """
    Shell-by-shell C⁰/C¹/C² bounds, gradient floor, Γ_k margins, barrier and
    subsolution ordering.

    Args:
        field: converged field
        tol: relative slack for the discrete C⁰ bounds
        subsolution_tol: absolute slack for u ≥ u̲
    """
    params = field.params
    n, k = params.n, params.k
    radii, u, grad, lams = node_derivatives(field)
    grad_norm = np.linalg.norm(grad, axis=-1)
    hess_norm = np.max(np.abs(lams), axis=-1)
    radial = np.sum(grad * field.discretization.points, axis=-1)
    sums = elementary_symmetric(lams, k)[:, 1:]
    gamma_min = np.min(sums, axis=-1)

    gradient_scaled = grad_norm * radii ** ((n - k) / k)
    hessian_scaled = hess_norm * radii ** (n / k)
    radial_scaled = radial * radii ** (n / k - 2.0)

    checks: Dict[str, bool] = {
        "gamma_k": bool(np.all(gamma_min >= -tol * np.max(np.abs(sums), axis=-1))),
        "gradient_floor": bool(np.all(radial > 0.0)),
    }
    summary: Dict[str, float] = {
        "gradient_scaled_min": float(gradient_scaled.min()),
        "gradient_scaled_max": float(gradient_scaled.max()),
        "hessian_scaled_max": float(hessian_scaled.max()),
        "radial_derivative_min": float(radial_scaled.min()),
        "gamma_min": float(gamma_min.min()),
    }

    value_scaled = green_gap = P = sub_gap = barrier_gap = None
    if field.kind == "exterior":
        if params.case == CaseKind.SUBCRITICAL:
            p = (n - 2 * k) / k
            value_scaled = -u * radii ** p
            lo = params.r0 ** p
            hi = (params.R0 ** 2 + params.eps ** 2) ** (p / 2.0)
            checks["value_bounds"] = bool(np.all(value_scaled >= lo * (1.0 - tol))
                                          and np.all(value_scaled <= hi * (1.0 + tol)))
            summary["value_scaled_min"] = float(value_scaled.min())
            summary["value_scaled_max"] = float(value_scaled.max())
        else:
            green_gap = np.abs(u - green(params, radii))
            half = radii <= np.median(radii)
            inner_max = float(green_gap[half].max())
            checks["green_gap_bounded"] = bool(green_gap[~half].max() <= 2.0 * inner_max + tol)
            summary["green_gap_max"] = float(green_gap.max())

        try:
            P = gradient_weight(params, u, grad_norm)
            summary["P_min"] = float(np.min(P))
            summary["P_max"] = float(np.max(P))
        except DomainError as e:
            logger.warning(f"[!] gradient weight undefined: {str(e)}")
            checks["gradient_weight_defined"] = False

        scale = max(1.0, float(np.max(np.abs(u))))
        barrier_gap = outer_barrier(params, radii) - u
        checks["barrier"] = bool(np.all(barrier_gap >= -tol * scale))
        checks["upper_barrier"] = bool(np.all(u <= upper_barrier(params, radii) + tol * scale))
        summary["barrier_gap"] = float(barrier_gap.min())

        if field.glue is not None:
            sub_gap = u - np.asarray(build_subsolution(params, field.domain, field.glue,
                                                       field.discretization.points)).reshape(-1)
            checks["subsolution"] = bool(np.all(sub_gap >= -subsolution_tol))
            summary["subsolution_gap"] = float(sub_gap.min())

    rows = []
    for index in _shells(field, radii):
        rows.append(ShellRow(
            radius=float(np.mean(radii[index])),
            value_scaled=_sub(value_scaled, index, np.mean),
            green_gap=_sub(green_gap, index, np.max),
            gradient_scaled=float(np.mean(gradient_scaled[index])),
            hessian_scaled=float(np.max(hessian_scaled[index])),
            P=_sub(P, index, np.mean),
            radial_derivative_scaled=float(np.min(radial_scaled[index])),
            gamma_min=float(np.min(gamma_min[index])),
            subsolution_gap=_sub(sub_gap, index, np.min),
            barrier_gap=_sub(barrier_gap, index, np.min),
        ))

    report = DiagnosticsReport(case=params.case.value, rows=rows, checks=checks, summary=summary)
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.warning(f"[!] Diagnostics flagged: {', '.join(failed)}")
    else:
        logger.info(f"[+] Diagnostics passed ({len(rows)} shells)")
    return report

"""
Level sets of converged fields and the integral quantities built on them:
I_{a,b,k}(t), the k-capacity, the boundary inequality, almost-monotonicity,
area growth and the coarea cross-check.
"""
import asyncio
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.ndimage import map_coordinates
from scipy.special import comb

from exterior_hessian.errors import PreconditionError
from exterior_hessian.components.closedforms import (
    CaseKind,
    inequality_threshold,
    monotone_shift_a0,
    monotone_weight_g,
    sphere_area,
)
from exterior_hessian.components.solver import RadialGrid, SolutionField, node_derivatives
from exterior_hessian.components.subsolution import boundary_quadrature
from .types import (
    AreaBound,
    AreaBoundSeries,
    CapacityPair,
    CoareaCheck,
    InequalityReport,
    LevelSetSample,
    MonotoneSeries,
)
from .utilities.extraction import (
    FieldSampler,
    facet_quadrature,
    level_curvatures,
    marching_squares,
    marching_triangles,
    sk_flux,
)

logger = logging.getLogger(__name__)

TAIL_WINDOW = (0.75, 0.95)     # fraction of the log-radius span used for the far-field fit
CAPACITY_SHELLS = 48
COAREA_TOL = 0.02


def _curvature_count(field: SolutionField) -> int:
    return min(field.params.k, field.grid.n - 1) + 1


def _level_range(field: SolutionField) -> Tuple[float, float]:
    boundary = field.boundary
    return float(boundary.inner_value), float(boundary.outer_value(np.asarray(field.grid.outer_radius)))


def extract(field: SolutionField, t: float, sampler: Optional[FieldSampler] = None) -> LevelSetSample:
    """
    Quadrature of {u = t}.

    Radial fields give one sphere found by bracketing in log ρ; Cartesian
    fields give the centroids of marching-squares segments or marching-cubes
    triangles weighted by facet measure.

    Raises:
        PreconditionError: t outside the range of u, empty level set, or a
            non-monotone radial profile
    """
    sampler = sampler or FieldSampler(field)
    n = field.grid.n
    if isinstance(field.grid, RadialGrid):
        radius = sampler.level_radius(t)
        points = np.zeros((1, n))
        points[0, 0] = radius
        weights = np.array([sphere_area(n, radius)])
    else:
        lo, hi = _level_range(field)
        if not lo < t < hi:
            raise PreconditionError(f"level t={t} outside ({lo:.6g}, {hi:.6g})")
        contour = marching_squares if n == 2 else marching_triangles
        points, weights = facet_quadrature(contour(field.values, field.grid.axis, t))
        if points.shape[0] == 0:
            raise PreconditionError(f"level set {{u = {t}}} is empty on this grid")

    _, grad, hess = sampler(points)
    grad_norm = np.linalg.norm(grad, axis=-1)
    curvatures = level_curvatures(grad, hess, _curvature_count(field))
    return LevelSetSample(t=t, points=points, weights=weights, grad_norm=grad_norm,
                          normals=grad / grad_norm[:, None], curvatures=curvatures,
                          flux=sk_flux(grad, hess, field.params.k))


async def _extract_levels(field: SolutionField, ts: Sequence[float], threads: int) -> List[LevelSetSample]:
    sampler = FieldSampler(field)
    semaphore = asyncio.Semaphore(threads)

    async def one(t: float) -> LevelSetSample:
        async with semaphore:
            return await asyncio.to_thread(extract, field, t, sampler)

    return list(await asyncio.gather(*(one(float(t)) for t in ts)))


def extract_many(field: SolutionField, ts: Sequence[float], threads: int = 1) -> List[LevelSetSample]:
    """Level sets for every t, in the order given; extraction runs on up to `threads` workers"""
    return asyncio.run(_extract_levels(field, ts, max(1, threads)))


def curvature_from_hessian(field: SolutionField, point, m: int) -> float:
    """H_{m−1} of the level surface of u through `point`"""
    if not 1 <= m <= field.grid.n:
        raise PreconditionError(f"m={m} outside 1..{field.grid.n}")
    _, grad, hess = FieldSampler(field)(point)
    return float(level_curvatures(grad, hess, m)[0, m - 1])


def I_abk(field: SolutionField, t: float, a: float, b: float,
          sample: Optional[LevelSetSample] = None) -> float:
    """∫_{S_t} g(t)^a |Du|^{b−k} S_k^{ij}u_iu_j dA"""
    sample = sample or extract(field, t)
    k = field.params.k
    g = monotone_weight_g(field.params, t)
    return float(np.sum(sample.weights * g ** a * sample.grad_norm ** (b - k) * sample.flux))


def I_abk_by_curvature(field: SolutionField, sample: LevelSetSample, a: float, b: float) -> float:
    """The same integral written as ∫_{S_t} g^a |Du|^{b+1} H_{k−1} dA"""
    k = field.params.k
    g = monotone_weight_g(field.params, sample.t)
    return float(np.sum(sample.weights * g ** a * sample.grad_norm ** (b + 1) * sample.curvature(k - 1)))


# ---------------------------------------------------------------- ∂Ω terms

def boundary_terms(field: SolutionField, resolution: int = 64) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    (weights, |Du|, curvatures H_0..H_{n−1}) on ∂Ω.

    |Du| is the one-sided normal derivative (−3c + 4u(p + hν) − u(p + 2hν))/(2h)
    on Cartesian grids and the spline derivative at r0 on radial grids.
    """
    n = field.grid.n
    if isinstance(field.grid, RadialGrid):
        r0 = field.grid.inner_radius
        sampler = FieldSampler(field)
        point = np.zeros((1, n))
        point[0, 0] = r0
        grad = sampler(point)[1]
        curvatures = np.array([[comb(n - 1, m, exact=True) * r0 ** (-m) for m in range(n)]], dtype=float)
        return np.array([sphere_area(n, r0)]), np.linalg.norm(grad, axis=-1), curvatures

    quadrature = boundary_quadrature(field.domain, resolution)
    h = field.grid.h
    axis = field.grid.axis
    c = field.boundary.inner_value

    def values_at(points: np.ndarray) -> np.ndarray:
        coords = (points - axis[0]) / h
        return map_coordinates(field.values, coords.T, order=3, mode="nearest")

    u1 = values_at(quadrature.points + h * quadrature.normals)
    u2 = values_at(quadrature.points + 2.0 * h * quadrature.normals)
    grad_norm = (-3.0 * c + 4.0 * u1 - u2) / (2.0 * h)
    return quadrature.weights, grad_norm, quadrature.curvatures


def _boundary_curvature(curvatures: np.ndarray, m: int) -> np.ndarray:
    if m >= curvatures.shape[1]:
        return np.zeros(curvatures.shape[0])
    return curvatures[:, m]


def _power_tail(radii: np.ndarray, density: np.ndarray, R: float) -> Tuple[float, Optional[float]]:
    """∫_R^∞ C r^α dr from a log-log fit of the outer radial density"""
    log_r = np.log(radii)
    lo = log_r.min() + TAIL_WINDOW[0] * (log_r.max() - log_r.min())
    hi = log_r.min() + TAIL_WINDOW[1] * (log_r.max() - log_r.min())
    window = (log_r >= lo) & (log_r <= hi) & (density > 0)
    if np.count_nonzero(window) < 3:
        return float("inf"), None
    alpha, log_c = np.polyfit(log_r[window], np.log(density[window]), 1)
    if alpha >= -1.0:
        return float("inf"), float(alpha)
    return float(np.exp(log_c) * R ** (alpha + 1.0) / (-alpha - 1.0)), float(alpha)


def capacity_pair(field: SolutionField, resolution: int = 64) -> CapacityPair:
    """
    Volume form ∫ S_k^{ij}u_iu_j dx (with a fitted far-field tail) and the
    boundary form ∫_{∂Ω} |Du|^k H_{k−1} dA of the k-capacity.
    """
    params = field.params
    n, k = params.n, params.k
    R = field.grid.outer_radius

    if isinstance(field.grid, RadialGrid):
        nodes = np.asarray(field.grid.nodes)
        points = np.zeros((nodes.size, n))
        points[:, 0] = nodes
        _, grad, hess = FieldSampler(field)(points)
        density = sphere_area(n, nodes) * sk_flux(grad, hess, k)
        truncated = float(simpson(density * nodes, x=np.log(nodes)))
        shell_radii, shell_density = nodes, density
    else:
        disc = field.discretization
        radii, _, grad, _ = node_derivatives(field)
        flux = sk_flux(grad, disc.matrices(disc.components(field.unknowns)), k)
        cell = field.grid.h ** n
        truncated = float(np.sum(flux) * cell)
        edges = np.geomspace(radii.min(), R, CAPACITY_SHELLS + 1)
        labels = np.clip(np.searchsorted(edges, radii, side="right") - 1, 0, CAPACITY_SHELLS - 1)
        sums = np.bincount(labels, weights=flux * cell, minlength=CAPACITY_SHELLS)
        shell_radii = np.sqrt(edges[:-1] * edges[1:])
        shell_density = sums / np.diff(edges)

    if params.case == CaseKind.SUBCRITICAL:
        tail, alpha = _power_tail(shell_radii, shell_density, R)
    else:
        tail, alpha = float("inf"), None
    if not np.isfinite(tail):
        logger.warning("[!] capacity tail does not converge; volume form is infinite")

    weights, grad_norm, curvatures = boundary_terms(field, resolution)
    boundary = float(np.sum(weights * grad_norm ** k * _boundary_curvature(curvatures, k - 1)))
    return CapacityPair(volume=truncated + tail, truncated_volume=truncated, tail=tail,
                        tail_exponent=alpha, boundary=boundary)


def inequality_report(field: SolutionField, b: float, tol: float = 1e-3, resolution: int = 64) -> InequalityReport:
    """
    ∫_{∂Ω}|Du|^{b+1}H_{k−1} against coefficient·∫_{∂Ω}|Du|^b H_k.

    Subcritical: coefficient (n−2k)/(n−k), b ≥ k(n−k−1)/(n−k).
    Critical: coefficient 1, b > n/2 − 1.
    Supercritical: coefficient 1, reported without a pass flag.

    Raises:
        PreconditionError: b below the case threshold
    """
    params = field.params
    n, k = params.n, params.k
    threshold = inequality_threshold(params)
    if params.case == CaseKind.SUBCRITICAL:
        if b < threshold:
            raise PreconditionError(f"b={b} below the admissible threshold k(n-k-1)/(n-k) = {threshold:.6g}")
        coefficient, gated = (n - 2 * k) / (n - k), True
    elif params.case == CaseKind.CRITICAL:
        if not b > threshold:
            raise PreconditionError(f"b={b} must exceed n/2 - 1 = {threshold:.6g}")
        coefficient, gated = 1.0, True
    else:
        coefficient, gated = 1.0, False

    weights, grad_norm, curvatures = boundary_terms(field, resolution)
    lhs = float(np.sum(weights * grad_norm ** (b + 1) * _boundary_curvature(curvatures, k - 1)))
    rhs = coefficient * float(np.sum(weights * grad_norm ** b * _boundary_curvature(curvatures, k)))
    slack = rhs - lhs
    passed = bool(slack >= -tol * max(abs(lhs), abs(rhs))) if gated else None
    logger.info(f"[*] Inequality b={b:g}: lhs={lhs:.6g} rhs={rhs:.6g} slack={slack:.3e}")
    return InequalityReport(case=params.case.value, b=b, lhs=lhs, rhs=rhs, coefficient=coefficient,
                            slack=slack, gated=gated, passed=passed)


# ---------------------------------------------------------------- t series

def _check_t_grid(field: SolutionField, ts: np.ndarray) -> None:
    case = field.params.case
    if case == CaseKind.SUBCRITICAL and not np.all((ts >= -1.0) & (ts < 0.0)):
        raise PreconditionError("Subcritical levels must lie in [-1, 0)")
    if case == CaseKind.CRITICAL and not np.all(ts >= 0.0):
        raise PreconditionError("Critical levels must be non-negative")
    if case == CaseKind.SUPERCRITICAL and not np.all(ts >= 1.0):
        raise PreconditionError("Supercritical levels must be at least 1")


def max_forward_increase(values: Sequence[float]) -> float:
    """max over s > t of I(s) − I(t) along an ascending t grid, floored at 0"""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    running_min = np.minimum.accumulate(v[:-1])
    return float(max(0.0, np.max(v[1:] - running_min)))


def monotone_series(field: SolutionField, b: float, ts: Sequence[float], threads: int = 1) -> MonotoneSeries:
    """I_{a,b,k}(t) with a = b − k + 1 over an ascending t grid"""
    params = field.params
    k = params.k
    grid = np.sort(np.asarray(ts, dtype=float))
    _check_t_grid(field, grid)
    a = b - k + 1
    a0 = monotone_shift_a0(params)
    samples = extract_many(field, grid, threads)
    values = [I_abk(field, s.t, a, b, sample=s) for s in samples]
    shifted = [I_abk(field, s.t, a + a0, b, sample=s) for s in samples]
    increase = max_forward_increase(values)
    drift = increase / params.eps ** 2 if params.eps > 0 else None
    logger.info(f"[*] Monotone series b={b:g}: {len(values)} levels, max forward increase {increase:.3e}")
    return MonotoneSeries(ts=grid.tolist(), values=values, shifted_values=shifted,
                          areas=[s.area for s in samples], a=a, b=b, k=k, a0=a0, eps=params.eps,
                          max_forward_increase=increase, drift_constant=drift)


def forward_increase_ratio(coarse: MonotoneSeries, fine: MonotoneSeries) -> float:
    """Ratio of max forward increases for ε and ε/2; about 4 under O(ε²) drift"""
    if fine.max_forward_increase == 0.0:
        return float("inf") if coarse.max_forward_increase > 0.0 else 1.0
    return coarse.max_forward_increase / fine.max_forward_increase


def _area_ratio(field: SolutionField, t: float, area: float) -> float:
    n, k = field.params.n, field.params.k
    case = field.params.case
    if case == CaseKind.SUBCRITICAL:
        return area * abs(t) ** (k * (n - 1) / (n - 2 * k))
    if case == CaseKind.CRITICAL:
        return area * np.exp(-(n - 1) * t)
    return area * t ** (-k * (n - 1) / (2 * k - n))


def area_bound_check(field: SolutionField, t: float, bound: Optional[float] = None,
                     sample: Optional[LevelSetSample] = None) -> AreaBound:
    """|S_t| and its normalization by the case growth rate"""
    sample = sample or extract(field, t)
    ratio = float(_area_ratio(field, t, sample.area))
    within = bool(np.isfinite(ratio) and (bound is None or ratio <= bound))
    return AreaBound(t=t, area=sample.area, ratio=ratio, within_bound=within)


def area_bound_series(field: SolutionField, ts: Sequence[float], growth_limit: float = 4.0,
                      bound: Optional[float] = None, threads: int = 1) -> AreaBoundSeries:
    """Area ratios over a t grid; flags growth of the ratio beyond `growth_limit`"""
    grid = np.sort(np.asarray(ts, dtype=float))
    samples = extract_many(field, grid, threads)
    rows = [area_bound_check(field, s.t, bound=bound, sample=s) for s in samples]
    ratios = np.array([row.ratio for row in rows])
    growth = float(ratios.max() / ratios.min()) if ratios.min() > 0 else float("inf")
    bounded = bool(growth <= growth_limit and all(row.within_bound for row in rows))
    if not bounded:
        logger.warning(f"[!] area ratio grows by {growth:.3g} across the t grid")
    return AreaBoundSeries(rows=rows, growth=growth, bounded=bounded)


def coarea_check(field: SolutionField, ts: Sequence[float], tol: float = COAREA_TOL,
                 threads: int = 1) -> CoareaCheck:
    """∫ S_k^{ij}u_iu_j dx over {t_min ≤ u ≤ t_max} against ∫ dt ∫_{S_t} S_k^{ij}u_iu_j/|Du| dA"""
    grid = np.sort(np.asarray(ts, dtype=float))
    if grid.size < 3:
        raise PreconditionError("coarea check needs at least three levels")
    samples = extract_many(field, grid, threads)
    per_level = np.array([np.sum(s.weights * s.flux / s.grad_norm) for s in samples])
    coarea = float(simpson(per_level, x=grid))

    k = field.params.k
    n = field.grid.n
    if isinstance(field.grid, RadialGrid):
        r_lo, r_hi = samples[0].points[0, 0], samples[-1].points[0, 0]
        radii = np.geomspace(r_lo, r_hi, 2001)
        points = np.zeros((radii.size, n))
        points[:, 0] = radii
        _, grad, hess = FieldSampler(field)(points)
        volume = float(simpson(sphere_area(n, radii) * sk_flux(grad, hess, k), x=radii))
    else:
        disc = field.discretization
        _, u, grad, _ = node_derivatives(field)
        flux = sk_flux(grad, disc.matrices(disc.components(u)), k)
        inside = (u >= grid[0]) & (u <= grid[-1])
        volume = float(np.sum(flux[inside]) * field.grid.h ** n)

    error = abs(volume - coarea) / abs(volume) if volume != 0.0 else float("inf")
    return CoareaCheck(t_range=[float(grid[0]), float(grid[-1])], volume=volume, coarea=coarea,
                       relative_error=error, passed=bool(error <= tol))

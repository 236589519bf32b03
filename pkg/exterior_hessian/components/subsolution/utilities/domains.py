"""
Distance geometry of convex domains: signed distance (positive outside),
its gradient and Hessian, and boundary quadrature with curvature functions.
"""
import logging
import math
from typing import Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from exterior_hessian.errors import DomainError, NumericalError
from exterior_hessian.components.symfun import batch_sk_gradient
from ..types import Ball, BoundaryQuadrature, Ellipsoid, SupportSampled

logger = logging.getLogger(__name__)

PROJECTION_TOL = 1e-12
MAX_PROJECTION_ITERATIONS = 200


def _points(domain, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.shape[-1] != domain.n:
        raise DomainError(f"points have dimension {pts.shape[-1]}, domain has n={domain.n}")
    return pts


# ---------------------------------------------------------------- ellipsoid

def _ellipsoid_parameter(y: np.ndarray, a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Projection parameter t of y onto the ellipsoid Σ y_i²/a_i² = 1: the largest
    root of φ(t) = Σ (a_i y_i/(a_i²+t))² − 1 with t > −min a_i².

    Returns:
        (t, regular) where regular is False for interior points on the medial
        axis, for which no root exists above −min a_i²
    """
    a2 = a * a
    lo_bound = -np.min(a2)
    F = np.sum(y * y / a2, axis=-1)
    outside = F >= 1.0
    radius = np.linalg.norm(y, axis=-1)

    # outside: φ convex decreasing and positive at the start, Newton increases monotonically
    t = np.where(outside, np.maximum(0.0, np.min(a) * radius - np.max(a2)), 0.0)
    lo = np.where(outside, t, lo_bound)
    hi = np.where(outside, np.inf, 0.0)
    converged = np.zeros(F.shape, dtype=bool)
    for _ in range(MAX_PROJECTION_ITERATIONS):
        denom = a2 + t[..., None]
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.sum((a * y / denom) ** 2, axis=-1) - 1.0
            dphi = -2.0 * np.sum(a2 * y * y / denom ** 3, axis=-1)
        phi = np.nan_to_num(phi, nan=np.inf)
        lo = np.where(phi > 0, np.maximum(lo, t), lo)
        hi = np.where(phi < 0, np.minimum(hi, t), hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dphi != 0, phi / dphi, np.nan)
        t_new = t - step
        # bisect whenever Newton leaves the bracket
        leaves = ~((t_new >= lo) & (t_new <= hi))
        t_new = np.where(leaves & np.isfinite(hi), 0.5 * (lo + hi), t_new)
        t_new = np.where(leaves & ~np.isfinite(hi), 2.0 * np.maximum(t, 1.0), t_new)
        converged = np.abs(t_new - t) <= PROJECTION_TOL * np.maximum(1.0, np.abs(t_new))
        t = np.where(converged, t, t_new)
        if np.all(converged):
            break
    regular = ~(~outside & (t - lo_bound <= PROJECTION_TOL * max(1.0, abs(lo_bound))))
    if not np.all(converged | ~regular):
        raise NumericalError(
            "ellipsoid projection did not converge",
            {"unconverged": int(np.sum(~converged & regular))},
        )
    return t, regular


def _ellipsoid_foot(domain: Ellipsoid, x: np.ndarray):
    a = np.asarray(domain.semi_axes, dtype=float)
    y = x - np.asarray(domain.center, dtype=float)
    t, regular = _ellipsoid_parameter(y, a)
    foot = a * a * y / (a * a + t[..., None])
    dist = np.linalg.norm(y - foot, axis=-1)
    F = np.sum(y * y / (a * a), axis=-1)
    if not np.all(regular):
        # medial-axis interior points: use the scaled-level estimate
        approx = np.min(a) * np.sqrt(np.clip(1.0 - F, 0.0, None))
        dist = np.where(regular, dist, approx)
        foot = np.where(regular[..., None], foot, y / np.sqrt(np.maximum(F, 1e-300))[..., None])
    sign = np.where(F >= 1.0, 1.0, -1.0)
    return sign * dist, foot + np.asarray(domain.center, dtype=float), a


# ---------------------------------------------------------------- support

def _support_spline(domain: SupportSampled) -> CubicSpline:
    h = np.asarray(domain.support, dtype=float)
    theta = np.linspace(0.0, 2.0 * math.pi, h.size + 1)
    return CubicSpline(theta, np.append(h, h[0]), bc_type="periodic")


def _support_argmax(domain: SupportSampled, x: np.ndarray):
    """θ* maximizing x·u(θ) − h(θ) and the maximum"""
    spline = _support_spline(domain)
    dense = np.linspace(0.0, 2.0 * math.pi, max(720, 8 * len(domain.support)), endpoint=False)
    u = np.stack([np.cos(dense), np.sin(dense)], axis=-1)
    scores = x @ u.T - spline(dense)
    theta = dense[np.argmax(scores, axis=-1)]
    for _ in range(50):
        c, s = np.cos(theta), np.sin(theta)
        x_dot_u = x[..., 0] * c + x[..., 1] * s
        x_dot_du = -x[..., 0] * s + x[..., 1] * c
        first = x_dot_du - spline(theta, 1)
        second = -x_dot_u - spline(theta, 2)
        step = np.where(second < 0, first / second, 0.0)
        theta = theta - step
        if np.max(np.abs(step)) < PROJECTION_TOL:
            break
    else:
        raise NumericalError("support-function projection did not converge")
    c, s = np.cos(theta), np.sin(theta)
    value = x[..., 0] * c + x[..., 1] * s - spline(theta)
    return theta, value


# ---------------------------------------------------------------- public

def signed_distance_array(domain, x) -> np.ndarray:
    pts = _points(domain, x)
    if isinstance(domain, Ball):
        return np.linalg.norm(pts - np.asarray(domain.center), axis=-1) - domain.radius
    if isinstance(domain, Ellipsoid):
        return _ellipsoid_foot(domain, pts)[0]
    return _support_argmax(domain, pts)[1]


def distance_gradient(domain, x) -> np.ndarray:
    """∇d, the outward normal at the foot point"""
    pts = _points(domain, x)
    if isinstance(domain, Ball):
        y = pts - np.asarray(domain.center)
        return y / np.linalg.norm(y, axis=-1, keepdims=True)
    if isinstance(domain, Ellipsoid):
        _, foot, a = _ellipsoid_foot(domain, pts)
        normal = (foot - np.asarray(domain.center)) / (a * a)
        return normal / np.linalg.norm(normal, axis=-1, keepdims=True)
    theta, _ = _support_argmax(domain, pts)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def distance_hessian(domain, x, step: float = 1e-6) -> np.ndarray:
    """D²d; exact for balls, central differences of the exact gradient otherwise"""
    pts = _points(domain, x)
    n = domain.n
    if isinstance(domain, Ball):
        y = pts - np.asarray(domain.center)
        r = np.linalg.norm(y, axis=-1)
        nu = y / r[..., None]
        eye = np.eye(n)
        return (eye - nu[..., :, None] * nu[..., None, :]) / r[..., None, None]
    hess = np.empty(pts.shape + (n,))
    scale = step * np.maximum(1.0, np.linalg.norm(pts, axis=-1))[..., None]
    for j in range(n):
        shift = np.zeros(n)
        shift[j] = 1.0
        plus = distance_gradient(domain, pts + scale * shift)
        minus = distance_gradient(domain, pts - scale * shift)
        hess[..., :, j] = (plus - minus) / (2.0 * scale)
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def _curvatures_from_defining(hess_F: np.ndarray, grad_F: np.ndarray, n: int) -> np.ndarray:
    """H_0,…,H_{n−1} of {F = 0} from H_{m−1} = S_m^{ij}F_iF_j/|DF|^{m+1}"""
    norm = np.linalg.norm(grad_F, axis=-1)
    out = np.empty(norm.shape + (n,))
    out[..., 0] = 1.0
    for m in range(2, n + 1):
        tensor = batch_sk_gradient(hess_F, m)
        out[..., m - 1] = np.einsum("...ij,...i,...j->...", tensor, grad_F, grad_F) / norm ** (m + 1)
    return out


def _sphere_rule(n: int, resolution: int) -> Tuple[np.ndarray, np.ndarray]:
    """Points and weights on the unit sphere S^{n−1}, n ∈ {2, 3}"""
    if n == 2:
        theta = 2.0 * math.pi * (np.arange(resolution) + 0.5) / resolution
        pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return pts, np.full(resolution, 2.0 * math.pi / resolution)
    if n == 3:
        z, wz = leggauss(resolution)
        phi = 2.0 * math.pi * (np.arange(2 * resolution) + 0.5) / (2 * resolution)
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        rho = np.sqrt(1.0 - zz ** 2)
        pts = np.stack([rho * np.cos(pp), rho * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = (wz[:, None] * np.full(2 * resolution, math.pi / resolution)[None, :]).reshape(-1)
        return pts, weights
    raise DomainError(f"boundary quadrature is available for n ∈ {{2, 3}}, got n={n}")


def boundary_quadrature(domain, resolution: int = 64) -> BoundaryQuadrature:
    n = domain.n
    if isinstance(domain, SupportSampled):
        spline = _support_spline(domain)
        theta = 2.0 * math.pi * (np.arange(resolution) + 0.5) / resolution
        h, dh, d2h = spline(theta), spline(theta, 1), spline(theta, 2)
        u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        du = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        radius_of_curvature = h + d2h
        if np.any(radius_of_curvature <= 0):
            raise DomainError("interpolated support function is not strictly convex")
        curv = np.stack([np.ones_like(h), 1.0 / radius_of_curvature], axis=-1)
        return BoundaryQuadrature(
            points=h[:, None] * u + dh[:, None] * du,
            normals=u,
            weights=radius_of_curvature * 2.0 * math.pi / resolution,
            curvatures=curv,
        )

    center = np.asarray(domain.center, dtype=float)
    axes = np.full(n, domain.radius) if isinstance(domain, Ball) else np.asarray(domain.semi_axes, dtype=float)
    sphere, weights = _sphere_rule(n, resolution)
    points = center + axes * sphere
    # the pull-back of surface measure under y ↦ A y is det(A)·|A^{-1} y| on the unit sphere
    co_normal = sphere / axes
    stretch = np.prod(axes) * np.linalg.norm(co_normal, axis=-1)
    normals = co_normal / np.linalg.norm(co_normal, axis=-1, keepdims=True)
    grad_F = 2.0 * (points - center) / axes ** 2
    hess_F = np.broadcast_to(np.diag(2.0 / axes ** 2), points.shape[:-1] + (n, n))
    return BoundaryQuadrature(
        points=points,
        normals=normals,
        weights=weights * stretch,
        curvatures=_curvatures_from_defining(np.array(hess_F), grad_F, n),
    )

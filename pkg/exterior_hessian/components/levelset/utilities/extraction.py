"""
Level-set geometry: derivative sampling, curvature functions from the
Hessian, and contouring of gridded fields.
"""
import logging
from typing import Tuple

import mcubes
import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator
from scipy.optimize import brentq

from exterior_hessian.errors import PreconditionError
from exterior_hessian.components.symfun import batch_sk_gradient
from exterior_hessian.components.solver import RadialGrid

logger = logging.getLogger(__name__)

GRADIENT_FLOOR = 1e-300


class FieldSampler:
    """
    u, Du and D²u of a solution field at arbitrary points.

    Radial fields use a cubic spline in log ρ; Cartesian fields interpolate
    central-difference derivatives linearly.
    """

    def __init__(self, field):
        self.field = field
        self.n = field.grid.n
        if isinstance(field.grid, RadialGrid):
            self.radial = True
            self.log_nodes = np.log(field.grid.nodes)
            self.spline = CubicSpline(self.log_nodes, field.values)
        else:
            self.radial = False
            h = field.grid.h
            values = np.asarray(field.values, dtype=float)
            grads = np.gradient(values, h)
            hess = [np.gradient(g, h) for g in grads]
            channels = [values[..., None], np.stack(grads, axis=-1)]
            for i in range(self.n):
                for j in range(self.n):
                    channels.append((0.5 * (hess[i][j] + hess[j][i]))[..., None])
            data = np.concatenate(channels, axis=-1)
            self.interpolator = RegularGridInterpolator((field.grid.axis,) * self.n, data,
                                                        method="linear", bounds_error=False, fill_value=None)

    def __call__(self, points) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.radial:
            r = np.linalg.norm(pts, axis=-1)
            s = np.log(r)
            u = self.spline(s)
            us = self.spline(s, 1)
            uss = self.spline(s, 2)
            du = us / r
            d2u = (uss - us) / r ** 2
            xhat = pts / r[:, None]
            outer = xhat[:, :, None] * xhat[:, None, :]
            grad = du[:, None] * xhat
            hess = d2u[:, None, None] * outer + (du / r)[:, None, None] * (np.eye(self.n) - outer)
            return u, grad, hess
        data = self.interpolator(pts)
        n = self.n
        return data[:, 0], data[:, 1:1 + n], data[:, 1 + n:].reshape(-1, n, n)

    def level_radius(self, t: float) -> float:
        """Radius of the sphere {u = t} of a radial field"""
        values = np.asarray(self.field.values)
        if np.any(np.diff(values) <= 0):
            raise PreconditionError("radial profile is not increasing; gradient floor violated")
        if not values[0] <= t <= values[-1]:
            raise PreconditionError(f"level t={t} outside [{values[0]:.6g}, {values[-1]:.6g}]")
        j = int(np.clip(np.searchsorted(values, t) - 1, 0, values.size - 2))
        s = brentq(lambda x: float(self.spline(x)) - t, self.log_nodes[j], self.log_nodes[j + 1], xtol=1e-14)
        return float(np.exp(s))


def level_curvatures(grad: np.ndarray, hess: np.ndarray, count: int) -> np.ndarray:
    """
    H_0..H_{count−1} of the level surfaces through the points.

    H_{m−1} = S_m^{ij}(D²u)u_iu_j / |Du|^{m+1}.
    """
    norm = np.linalg.norm(grad, axis=-1)
    if np.any(norm <= GRADIENT_FLOOR):
        raise PreconditionError("vanishing gradient at a level-set point")
    out = np.empty(norm.shape + (count,))
    for m in range(1, count + 1):
        tensor = batch_sk_gradient(hess, m)
        out[..., m - 1] = np.einsum("...i,...ij,...j->...", grad, tensor, grad) / norm ** (m + 1)
    return out


def sk_flux(grad: np.ndarray, hess: np.ndarray, k: int) -> np.ndarray:
    """S_k^{ij}(D²u)u_iu_j"""
    return np.einsum("...i,...ij,...j->...", grad, batch_sk_gradient(hess, k), grad)


def _edge_crossings(values: np.ndarray, axis_values: np.ndarray, t: float, axis: int):
    """Crossing flags and points on grid edges along `axis` (2D)"""
    lo = np.take(values, np.arange(values.shape[axis] - 1), axis=axis)
    hi = np.take(values, np.arange(1, values.shape[axis]), axis=axis)
    crossing = (lo < t) != (hi < t)
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(crossing, (t - lo) / (hi - lo), 0.0)
    X, Y = np.meshgrid(axis_values[:lo.shape[0]], axis_values[:lo.shape[1]], indexing="ij")
    h = axis_values[1] - axis_values[0]
    points = np.stack([X, Y], axis=-1)
    points[..., axis] += h * theta
    return crossing, points


def marching_squares(values: np.ndarray, axis_values: np.ndarray, t: float) -> np.ndarray:
    """
    Segments of {u = t} on a square grid.

    Returns:
        (M, 2, 2) array of segment endpoints
    """
    cross0, pts0 = _edge_crossings(values, axis_values, t, 0)   # edges (i,j)-(i+1,j)
    cross1, pts1 = _edge_crossings(values, axis_values, t, 1)   # edges (i,j)-(i,j+1)
    # cell (i, j) edges in order: bottom, right, top, left
    flags = np.stack([cross0[:, :-1], cross1[1:, :], cross0[:, 1:], cross1[:-1, :]], axis=-1)
    points = np.stack([pts0[:, :-1], pts1[1:, :], pts0[:, 1:], pts1[:-1, :]], axis=-2)
    count = flags.sum(axis=-1)

    segments = []
    simple = np.argwhere(count == 2)
    if simple.size:
        cell_flags = flags[tuple(simple.T)]
        cell_points = points[tuple(simple.T)]
        order = np.argsort(~cell_flags, axis=-1, kind="stable")[:, :2]
        rows = np.arange(simple.shape[0])
        segments.append(np.stack([cell_points[rows, order[:, 0]], cell_points[rows, order[:, 1]]], axis=1))

    saddle = np.argwhere(count == 4)
    if saddle.size:
        i, j = saddle.T
        corners = np.stack([values[i, j], values[i + 1, j], values[i + 1, j + 1], values[i, j + 1]], axis=-1)
        center_below = corners.mean(axis=-1) < t
        corner_below = corners[:, 0] < t
        cell_points = points[i, j]
        cut_a = center_below != corner_below
        first = np.where(cut_a[:, None, None], cell_points[:, [3, 0]], cell_points[:, [0, 1]])
        second = np.where(cut_a[:, None, None], cell_points[:, [1, 2]], cell_points[:, [2, 3]])
        segments.extend([first, second])

    if not segments:
        return np.zeros((0, 2, 2))
    return np.concatenate(segments, axis=0)


def marching_triangles(values: np.ndarray, axis_values: np.ndarray, t: float) -> np.ndarray:
    """
    Triangles of {u = t} on a cubic grid.

    Returns:
        (M, 3, 3) array of triangle vertices in world coordinates
    """
    vertices, triangles = mcubes.marching_cubes(np.ascontiguousarray(values, dtype=float), float(t))
    if len(triangles) == 0:
        return np.zeros((0, 3, 3))
    h = axis_values[1] - axis_values[0]
    world = axis_values[0] + h * np.asarray(vertices, dtype=float)
    return world[np.asarray(triangles, dtype=np.int64)]


def facet_quadrature(facets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One-point (centroid) rule on segments or triangles"""
    centroids = facets.mean(axis=1)
    if facets.shape[1] == 2:
        measure = np.linalg.norm(facets[:, 1] - facets[:, 0], axis=-1)
    else:
        measure = 0.5 * np.linalg.norm(np.cross(facets[:, 1] - facets[:, 0], facets[:, 2] - facets[:, 0]), axis=-1)
    keep = measure > 0.0
    return centroids[keep], measure[keep]

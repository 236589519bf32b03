"""
Sampling a solution field at arbitrary positions: linear in the radius for
radial fields, trilinear (bilinear for n = 2) on Cartesian boxes.
"""
import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..types import RadialGrid


def sample_radial(field, radii: np.ndarray) -> np.ndarray:
    return np.interp(np.asarray(radii, dtype=float), field.grid.nodes, field.values)


def sample_points(field, points: np.ndarray) -> np.ndarray:
    """u at (N, n) points; radial fields are sampled at |x|"""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(field.grid, RadialGrid):
        return sample_radial(field, np.linalg.norm(pts, axis=-1))
    axis = field.grid.axis
    interpolator = RegularGridInterpolator((axis,) * field.grid.n, field.values,
                                           method="linear", bounds_error=False, fill_value=None)
    return interpolator(pts)


def sample_on_axis(field, radii: np.ndarray) -> np.ndarray:
    """u(r·e₁); for radial fields the direction is irrelevant"""
    r = np.asarray(radii, dtype=float)
    if isinstance(field.grid, RadialGrid):
        return sample_radial(field, r)
    points = np.zeros((r.size, field.grid.n))
    points[:, 0] = r
    return sample_points(field, points)


"""
Strictly k-convex subsolutions: an inner profile built from the distance to
∂Ω glued to an outer radial profile by a C² smooth maximum.
"""
import logging
from typing import Callable, Tuple, Union

import numpy as np

from exterior_hessian.errors import ConfigurationError
from exterior_hessian.components.closedforms import CaseKind, ProblemParams, w_profile, w_profile_derivatives
from .types import GlueParams
from .utilities.domains import distance_gradient, distance_hessian, signed_distance_array

logger = logging.getLogger(__name__)

Derivatives = Tuple[np.ndarray, np.ndarray, np.ndarray]


def signed_distance(domain, x) -> Union[float, np.ndarray]:
    d = signed_distance_array(domain, x)
    return float(d) if np.ndim(d) == 0 else d


def phi_zero(domain, t0: float, x) -> Union[float, np.ndarray]:
    """Φ⁰ = (e^{t₀d} − 1)/t₀"""
    value = np.expm1(t0 * signed_distance_array(domain, x)) / t0
    return float(value) if np.ndim(value) == 0 else value


# ---------------------------------------------------------------- smooth max

def _band_polynomial(s: np.ndarray):
    """p(s) = (3 + 6s² − s⁴)/8 with p′ and p″"""
    s2 = s * s
    return (3.0 + 6.0 * s2 - s2 * s2) / 8.0, (3.0 * s - s * s2) / 2.0, 1.5 * (1.0 - s2)


def smooth_abs(s, delta: float):
    """m_δ(s) and its first two derivatives"""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < delta
    p, dp, d2p = _band_polynomial(np.clip(s / delta, -1.0, 1.0))
    m = np.where(inside, delta * p, np.abs(s))
    dm = np.where(inside, dp, np.sign(s))
    d2m = np.where(inside, d2p / delta, 0.0)
    return m, dm, d2m


def smooth_max_values(h, g, delta: float) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    return 0.5 * (h + g + smooth_abs(h - g, delta)[0])


def smooth_max(h: Union[Callable, np.ndarray, float], g: Union[Callable, np.ndarray, float],
               delta: float, x=None) -> Union[float, np.ndarray]:
    """H = ½(h + g + m_δ(h − g)); h and g are callables evaluated at x, or values"""
    if delta <= 0:
        raise ConfigurationError("delta must be positive", "delta")
    hv = h(x) if callable(h) else h
    gv = g(x) if callable(g) else g
    value = smooth_max_values(hv, gv, delta)
    return float(value) if np.ndim(value) == 0 else value


def smooth_max_derivatives(h: Derivatives, g: Derivatives, delta: float) -> Derivatives:
    """
    Value, gradient and Hessian of H from those of h and g.

    D²H = ½(1+t)D²h + ½(1−t)D²g + (m″/2)·D(h−g)⊗D(h−g), with t = m′ ∈ [−1, 1].
    """
    hv, hg, hh = h
    gv, gg, gh = g
    m, dm, d2m = smooth_abs(hv - gv, delta)
    value = 0.5 * (hv + gv + m)
    grad = 0.5 * ((1.0 + dm)[..., None] * hg + (1.0 - dm)[..., None] * gg)
    diff = hg - gg
    hess = (0.5 * (1.0 + dm)[..., None, None] * hh
            + 0.5 * (1.0 - dm)[..., None, None] * gh
            + 0.5 * d2m[..., None, None] * diff[..., :, None] * diff[..., None, :])
    return value, grad, hess


# ---------------------------------------------------------------- profiles

def _radial_derivatives(x: np.ndarray, f, df, d2f) -> Derivatives:
    r = np.linalg.norm(x, axis=-1)
    xhat = x / r[..., None]
    outer = xhat[..., :, None] * xhat[..., None, :]
    eye = np.eye(x.shape[-1])
    grad = df[..., None] * xhat
    hess = d2f[..., None, None] * outer + (df / r)[..., None, None] * (eye - outer)
    return f, grad, hess


def _outer_profile(params: ProblemParams, x: np.ndarray) -> Derivatives:
    r = np.linalg.norm(x, axis=-1)
    w, dw, d2w = (np.asarray(v) for v in w_profile_derivatives(params, r))
    return _radial_derivatives(x, w, dw, d2w)


def _exponential_profile(domain, x: np.ndarray, scale: float, rate: float, offset: float) -> Derivatives:
    """scale·(e^{rate·d} − 1)/rate + offset"""
    d = signed_distance_array(domain, x)
    grad_d = distance_gradient(domain, x)
    hess_d = distance_hessian(domain, x)
    growth = np.exp(rate * d)
    value = scale * np.expm1(rate * d) / rate + offset
    grad = (scale * growth)[..., None] * grad_d
    hess = (scale * growth)[..., None, None] * (rate * grad_d[..., :, None] * grad_d[..., None, :] + hess_d)
    return value, grad, hess


def check_glue(params: ProblemParams, domain, glue: GlueParams) -> None:
    """The smooth-max band must stay off ∂Ω and inside B_{2R0}"""
    r_in, r_out = domain.bounding_radii
    c = params.case.boundary_value
    if not c - w_profile(params, r_out) > glue.delta:
        raise ConfigurationError(
            f"glue band overlaps ∂Ω: c - w(r_out) = {c - w_profile(params, r_out):.6g} ≤ δ = {glue.delta:.6g}",
            "delta")
    inner_at_edge = glue.tau0 * np.expm1(2.0 * params.R0 - r_in) + c
    if not w_profile(params, 2.0 * params.R0) - inner_at_edge > glue.delta:
        raise ConfigurationError("glue band extends beyond B_(2 R0); reduce tau0", "tau0")


def subsolution_derivatives(params: ProblemParams, domain, glue: GlueParams, x) -> Derivatives:
    """(u̲, Du̲, D²u̲) at points outside Ω, stacked as (N, n)"""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    value, grad, hess = _outer_profile(params, pts)
    near = np.linalg.norm(pts, axis=-1) < 3.0 * params.R0
    if np.any(near):
        inner = _exponential_profile(domain, pts[near], glue.tau0, 1.0, params.case.boundary_value)
        outer = (value[near], grad[near], hess[near])
        glued = smooth_max_derivatives(outer, inner, glue.delta)
        value = np.array(value, copy=True)
        grad = np.array(grad, copy=True)
        hess = np.array(hess, copy=True)
        value[near], grad[near], hess[near] = glued
    return value, grad, hess


def build_subsolution(params: ProblemParams, domain, glue: GlueParams, x) -> Union[float, np.ndarray]:
    """
    u̲(x): τ₀(e^{d} − 1) + c near Ω, w outside B_{2R0}, smooth max in between.

    The inner profile is only evaluated inside B_{3R0}, beyond which u̲ = w.
    """
    shape = np.shape(x)[:-1]
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(pts, axis=-1)
    value = np.asarray(w_profile(params, r), dtype=float)
    near = r < 3.0 * params.R0
    if np.any(near):
        d = signed_distance_array(domain, pts[near])
        inner = glue.tau0 * np.expm1(d) + params.case.boundary_value
        value = np.array(value, copy=True)
        value[near] = smooth_max_values(value[near], inner, glue.delta)
    value = value.reshape(shape)
    return float(value) if np.ndim(value) == 0 else value


# ---------------------------------------------------------------- ring mode

def check_ring_glue(domain, outer_radius: float, glue: GlueParams) -> None:
    r_in, r_out = domain.bounding_radii
    outer_on_inner = 1.0 + glue.ring_slope * (r_out ** 2 - outer_radius ** 2) / (2.0 * outer_radius)
    if not outer_on_inner < -glue.delta:
        raise ConfigurationError("ring outer profile does not clear ∂Ω₀; increase K1", "K1")
    inner_on_outer = glue.tau0 * np.expm1(glue.t0 * (outer_radius - r_in)) / glue.t0
    if not inner_on_outer < 1.0 - glue.delta:
        raise ConfigurationError("ring inner profile does not clear ∂Ω₁; reduce tau0", "tau0")


def ring_subsolution_derivatives(domain, outer_radius: float, glue: GlueParams, x) -> Derivatives:
    """τ₀Φ⁰ near Ω₀ glued to 1 + K₁Φ¹, Φ¹ = (|x|² − R²)/(2R)"""
    pts = np.asarray(x, dtype=float)
    n = pts.shape[-1]
    K1 = glue.ring_slope
    value = 1.0 + K1 * (np.sum(pts * pts, axis=-1) - outer_radius ** 2) / (2.0 * outer_radius)
    grad = (K1 / outer_radius) * pts
    hess = np.broadcast_to((K1 / outer_radius) * np.eye(n), pts.shape[:-1] + (n, n))
    inner = _exponential_profile(domain, pts, glue.tau0, glue.t0, 0.0)
    return smooth_max_derivatives((value, grad, hess), inner, glue.delta)


def build_ring_subsolution(domain, outer_radius: float, glue: GlueParams, x) -> Union[float, np.ndarray]:
    value = ring_subsolution_derivatives(domain, outer_radius, glue, x)[0]
    return float(value) if np.ndim(value) == 0 else value

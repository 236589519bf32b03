"""
Explicit radial objects of the exterior problem: Green functions, the
ε-profiles w and their right-hand sides f = S_k(D²w), outer barriers,
gradient weights and the radial form of S_k.

Every function accepts a scalar radius or an array of radii. Powers of
r² + ε² are evaluated in log space so radii up to ~1e6·r0 stay finite.
"""
import logging
import math
from typing import Tuple, Union

import numpy as np
from scipy.special import comb, gammaln

from exterior_hessian.errors import DomainError
from .types import CaseKind, ProblemParams

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# relative slack for radius range checks at the endpoints of [r0, R]
_RANGE_RTOL = 1e-12


def _out(value: np.ndarray, like: ArrayLike) -> ArrayLike:
    return float(value) if np.ndim(like) == 0 else value


def _positive_radius(radius: ArrayLike) -> np.ndarray:
    r = np.asarray(radius, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    return r


def green_exponent(params: ProblemParams) -> float:
    """(2k − n)/k, the power in the Green function (0 in the Critical case)"""
    return (2 * params.k - params.n) / params.k


def _log_s(params: ProblemParams, r: np.ndarray) -> np.ndarray:
    return np.log(r * r + params.eps ** 2)


def _power_form(params: ProblemParams) -> Tuple[float, float, float]:
    """(a, c1, c0) with w = c1·s^a + c0, s = r² + ε² (non-critical cases)"""
    q = (2 * params.k - params.n) / (2 * params.k)
    log_s0 = math.log(params.R0 ** 2 + params.eps ** 2)
    if params.case == CaseKind.SUBCRITICAL:
        return q, -math.exp(-q * log_s0), 0.0
    return q, 1.0, 1.0 - math.exp(q * log_s0)


def green(params: ProblemParams, radius: ArrayLike) -> ArrayLike:
    r = _positive_radius(radius)
    if params.case == CaseKind.CRITICAL:
        return _out(np.log(r), radius)
    value = np.exp(green_exponent(params) * np.log(r))
    if params.case == CaseKind.SUBCRITICAL:
        value = -value
    return _out(value, radius)


def w_profile(params: ProblemParams, radius: ArrayLike) -> ArrayLike:
    r = np.asarray(radius, dtype=float)
    if params.case == CaseKind.CRITICAL:
        value = 0.5 * (_log_s(params, r) - math.log(params.R0 ** 2 + params.eps ** 2))
        return _out(value, radius)
    a, c1, c0 = _power_form(params)
    return _out(c1 * np.exp(a * _log_s(params, r)) + c0, radius)


def w_profile_derivatives(params: ProblemParams, radius: ArrayLike):
    """(w, w′, w″) of the ε-profile"""
    r = np.asarray(radius, dtype=float)
    s = r * r + params.eps ** 2
    if params.case == CaseKind.CRITICAL:
        w = 0.5 * (np.log(s) - math.log(params.R0 ** 2 + params.eps ** 2))
        dw = r / s
        d2w = 1.0 / s - 2.0 * r * r / (s * s)
    else:
        a, c1, c0 = _power_form(params)
        log_s = np.log(s)
        w = c1 * np.exp(a * log_s) + c0
        dw = 2.0 * a * c1 * r * np.exp((a - 1.0) * log_s)
        d2w = 2.0 * a * c1 * (np.exp((a - 1.0) * log_s) + 2.0 * (a - 1.0) * r * r * np.exp((a - 2.0) * log_s))
    return _out(w, radius), _out(dw, radius), _out(d2w, radius)


def f_constant(params: ProblemParams) -> float:
    """f·(r²+ε²)^{n/2+1}, the r-independent factor of the right-hand side"""
    n, k, eps = params.n, params.k, params.eps
    if params.case == CaseKind.CRITICAL:
        return 2.0 * comb(n - 1, n // 2 - 1, exact=True) * eps ** 2
    p = abs(n - 2 * k) / k
    value = comb(n, k, exact=True) * p ** k * eps ** 2
    if params.case == CaseKind.SUBCRITICAL:
        value *= math.exp(0.5 * (n - 2 * k) * math.log(params.R0 ** 2 + eps ** 2))
    return value


def f_rhs(params: ProblemParams, radius: ArrayLike) -> ArrayLike:
    """S_k(D²w) in closed form"""
    r = np.asarray(radius, dtype=float)
    if params.eps == 0.0:
        return _out(np.zeros_like(r), radius)
    value = f_constant(params) * np.exp(-(params.n / 2.0 + 1.0) * _log_s(params, r))
    return _out(value, radius)


def radial_sk(n: int, k: int, du: ArrayLike, d2u: ArrayLike, radius: ArrayLike) -> ArrayLike:
    """S_k of the Hessian of u(|x|): eigenvalues u″ once and u′/r with multiplicity n−1"""
    r = _positive_radius(radius)
    t = np.asarray(du, dtype=float) / r
    value = comb(n - 1, k, exact=True) * t ** k + comb(n - 1, k - 1, exact=True) * np.asarray(d2u, dtype=float) * t ** (k - 1)
    return _out(value, radius)


def barrier_slope(params: ProblemParams) -> float:
    """
    a^{ε,R}: the coefficient that makes the outer barrier match the truncated
    boundary data, ρ^{ε,R}(R) = w(R).
    """
    r0, R = params.r0, params.R
    w_R = w_profile(params, R)
    if params.case == CaseKind.CRITICAL:
        return w_R / math.log(R / r0)
    q = green_exponent(params)
    if params.case == CaseKind.SUBCRITICAL:
        # q < 0 here, so (R/r0)^q = (r0/R)^p with p = (n−2k)/k
        return (1.0 + w_R) / (1.0 - math.exp(q * math.log(R / r0)))
    return (w_R - 1.0) / (math.exp(q * math.log(R)) - math.exp(q * math.log(r0)))


def outer_barrier(params: ProblemParams, radius: ArrayLike) -> ArrayLike:
    r = np.asarray(radius, dtype=float)
    lo, hi = params.r0 * (1 - _RANGE_RTOL), params.R * (1 + _RANGE_RTOL)
    if np.any(r < lo) or np.any(r > hi):
        raise DomainError(f"radius outside [r0, R] = [{params.r0}, {params.R}]")
    a = barrier_slope(params)
    if params.case == CaseKind.CRITICAL:
        return _out(a * np.log(r / params.r0), radius)
    q = green_exponent(params)
    ratio = np.exp(q * np.log(r / params.r0))
    if params.case == CaseKind.SUBCRITICAL:
        return _out(-a * ratio + a - 1.0, radius)
    return _out(a * params.r0 ** q * (ratio - 1.0) + 1.0, radius)


def exact_solution(params: ProblemParams, radius: ArrayLike) -> ArrayLike:
    """Exterior solution for Ω = B_{r0} with ε = 0"""
    r = _positive_radius(radius)
    if params.case == CaseKind.CRITICAL:
        return _out(np.log(r / params.r0), radius)
    q = green_exponent(params)
    if params.case == CaseKind.SUBCRITICAL:
        return _out(-np.exp(q * np.log(r / params.r0)), radius)
    return _out(np.exp(q * np.log(r)) - params.r0 ** q + 1.0, radius)


def exact_solution_derivatives(params: ProblemParams, radius: ArrayLike):
    """(u, u′, u″) of `exact_solution`"""
    r = _positive_radius(radius)
    u = np.asarray(exact_solution(params, r))
    if params.case == CaseKind.CRITICAL:
        return _out(u, radius), _out(1.0 / r, radius), _out(-1.0 / r ** 2, radius)
    q = green_exponent(params)
    scale = -params.r0 ** (-q) if params.case == CaseKind.SUBCRITICAL else 1.0
    du = scale * q * np.exp((q - 1.0) * np.log(r))
    d2u = scale * q * (q - 1.0) * np.exp((q - 2.0) * np.log(r))
    return _out(u, radius), _out(du, radius), _out(d2u, radius)


def upper_barrier(params: ProblemParams, radius: ArrayLike) -> ArrayLike:
    """ε- and R-independent upper bound for every u^{ε,R}; coincides with the ball solution"""
    return exact_solution(params, radius)


def lower_barrier_subcritical(params: ProblemParams, radius: ArrayLike) -> ArrayLike:
    """−R0^p|x|^{−p}: the Subcritical lower C⁰ bound"""
    if params.case != CaseKind.SUBCRITICAL:
        raise DomainError("lower power barrier is defined for the Subcritical case only")
    r = _positive_radius(radius)
    return _out(-np.exp(green_exponent(params) * np.log(r / params.R0)), radius)


def _check_sign(params: ProblemParams, u: np.ndarray) -> None:
    if params.case == CaseKind.SUBCRITICAL and np.any(u >= 0):
        raise DomainError("Subcritical weights need u < 0")
    if params.case == CaseKind.SUPERCRITICAL and np.any(u <= 0):
        raise DomainError("Supercritical weights need u > 0")


def gradient_weight(params: ProblemParams, u: ArrayLike, grad_norm: ArrayLike) -> ArrayLike:
    """P = |Du|²·weight(u), constant along pure-power radial solutions"""
    uu = np.asarray(u, dtype=float)
    g2 = np.asarray(grad_norm, dtype=float) ** 2
    n, k = params.n, params.k
    if params.case == CaseKind.CRITICAL:
        return _out(g2 * np.exp(2.0 * uu), u)
    if params.case == CaseKind.SUPERCRITICAL and np.any(uu < 1.0 - 1e-9):
        raise DomainError("Supercritical gradient weight needs u ≥ 1")
    _check_sign(params, uu)
    if params.case == CaseKind.SUBCRITICAL:
        return _out(g2 * np.exp(-2.0 * (n - k) / (n - 2 * k) * np.log(-uu)), u)
    return _out(g2 * np.exp(2.0 * (n - k) / (2 * k - n) * np.log(uu)), u)


def monotone_weight_g(params: ProblemParams, u: ArrayLike) -> ArrayLike:
    """g(u), the level weight in I_{a,b,k}"""
    uu = np.asarray(u, dtype=float)
    n, k = params.n, params.k
    if params.case == CaseKind.CRITICAL:
        return _out(np.exp(uu), u)
    _check_sign(params, uu)
    base = -uu if params.case == CaseKind.SUBCRITICAL else uu
    return _out(np.exp((n - k) / (2 * k - n) * np.log(base)), u)


def monotone_shift_a0(params: ProblemParams) -> float:
    """Exponent a₀ of the extra g^{a₀} factor in the monotone quantity.

    For k = n the weight g is identically 1, so the factor is trivial and a₀ = 0.
    """
    n, k = params.n, params.k
    if params.case == CaseKind.CRITICAL or k == n:
        return 0.0
    return 2.0 * (2 * k - n) / (n - k)


def inequality_threshold(params: ProblemParams) -> float:
    """Smallest admissible b: k(n−k−1)/(n−k) (Subcritical), n/2 − 1 (Critical, strict), 1 − k (Supercritical)"""
    n, k = params.n, params.k
    if params.case == CaseKind.SUBCRITICAL:
        return k * (n - k - 1) / (n - k)
    if params.case == CaseKind.CRITICAL:
        return n / 2 - 1
    return 1.0 - k


def decay_exponents(params: ProblemParams) -> Tuple[float, float, float]:
    """Expected log-log slopes of (|u| or u), |Du| and |D²u| in |x|"""
    n, k = params.n, params.k
    value = -(n - 2 * k) / k if params.case == CaseKind.SUBCRITICAL else green_exponent(params)
    return value, -(n - k) / k, -n / k


def unit_sphere_area(n: int) -> float:
    """ω_{n−1} = |S^{n−1}| = 2π^{n/2}/Γ(n/2)"""
    return math.exp(math.log(2.0) + 0.5 * n * math.log(math.pi) - gammaln(0.5 * n))


def sphere_area(n: int, radius: ArrayLike) -> ArrayLike:
    r = np.asarray(radius, dtype=float)
    return _out(unit_sphere_area(n) * r ** (n - 1), radius)


def ball_capacity(params: ProblemParams) -> float:
    """∫_{∂B_{r0}} |Du|^k H_{k−1} for the exact Subcritical ball solution"""
    if params.case != CaseKind.SUBCRITICAL:
        raise DomainError("the k-capacity is finite only in the Subcritical case")
    n, k = params.n, params.k
    return ((n - 2 * k) / k) ** k * comb(n - 1, k - 1, exact=True) * unit_sphere_area(n) * params.r0 ** (n - 2 * k)

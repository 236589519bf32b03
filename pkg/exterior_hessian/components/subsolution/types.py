import math
from typing import Annotated, Any, Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator

from exterior_hessian.components.closedforms import CaseKind, ProblemParams


class Ball(BaseModel):
    model_config = ConfigDict(frozen=True)

    shape: Literal["ball"] = "ball"
    center: tuple[float, ...] = Field(description="Center of the ball")
    radius: float = Field(gt=0, description="Radius of the ball")

    @property
    def n(self) -> int:
        return len(self.center)

    @model_validator(mode="after")
    def _origin_inside(self) -> "Ball":
        if len(self.center) < 2:
            raise ValueError("ball center needs at least two coordinates")
        if math.hypot(*self.center) >= self.radius:
            raise ValueError("the origin must lie inside the domain")
        return self

    @property
    def bounding_radii(self) -> tuple[float, float]:
        offset = math.hypot(*self.center)
        return self.radius - offset, self.radius + offset


class Ellipsoid(BaseModel):
    model_config = ConfigDict(frozen=True)

    shape: Literal["ellipsoid"] = "ellipsoid"
    center: tuple[float, ...] = Field(description="Center of the ellipsoid")
    semi_axes: tuple[float, ...] = Field(description="Axis-aligned semi-axes a_1,…,a_n")

    @property
    def n(self) -> int:
        return len(self.center)

    @model_validator(mode="after")
    def _check(self) -> "Ellipsoid":
        if len(self.semi_axes) != len(self.center) or len(self.center) < 2:
            raise ValueError("semi_axes and center must have the same length n ≥ 2")
        if min(self.semi_axes) <= 0:
            raise ValueError("semi-axes must be positive")
        if sum((c / a) ** 2 for c, a in zip(self.center, self.semi_axes)) >= 1.0:
            raise ValueError("the origin must lie inside the domain")
        return self

    @property
    def bounding_radii(self) -> tuple[float, float]:
        offset = math.hypot(*self.center)
        return max(min(self.semi_axes) - offset, 0.0), max(self.semi_axes) + offset


class SupportSampled(BaseModel):
    """Planar convex body given by its support function on θ_j = 2πj/m"""
    model_config = ConfigDict(frozen=True)

    shape: Literal["support"] = "support"
    support: tuple[float, ...] = Field(description="h(θ_j) on a uniform direction grid")

    @property
    def n(self) -> int:
        return 2

    @field_validator("support")
    @classmethod
    def _sublinear(cls, support: tuple[float, ...]) -> tuple[float, ...]:
        h = np.asarray(support, dtype=float)
        if h.size < 8:
            raise ValueError("need at least 8 support samples")
        if np.any(h <= 0):
            raise ValueError("the origin must lie inside the domain (support values must be positive)")
        step = 2.0 * math.pi / h.size
        # edge lengths of the polygon cut out by the supporting lines
        edges = np.roll(h, 1) + np.roll(h, -1) - 2.0 * math.cos(step) * h
        if np.any(edges <= 0):
            bad = int(np.argmin(edges))
            raise ValueError(f"support samples fail the convexity check at index {bad}")
        return support

    @property
    def bounding_radii(self) -> tuple[float, float]:
        return float(min(self.support)), float(max(self.support))


ConvexDomain = Annotated[Union[Ball, Ellipsoid, SupportSampled], Field(discriminator="shape")]

_domain_adapter = TypeAdapter(ConvexDomain)


def parse_domain(data: Any):
    return _domain_adapter.validate_python(data)


class GlueParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float = Field(gt=0, description="Half-width δ of the smooth-max band")
    t0: float = Field(default=1.0, gt=0, description="Exponential rate in Φ⁰ (ring mode)")
    tau0: float = Field(gt=0, description="Subsolution scale τ₀")
    K1: Optional[float] = Field(default=None, gt=0, description="Outer slope of the ring subsolution, 2/t1 by default")
    t1: float = Field(default=1.0, gt=0, description="Ring outer parameter t₁")

    @property
    def ring_slope(self) -> float:
        return self.K1 if self.K1 is not None else 2.0 / self.t1

    @classmethod
    def for_case(cls, params: ProblemParams, **overrides: Any) -> "GlueParams":
        """Default δ and τ₀ of the case lemmas"""
        n, k, R0 = params.n, params.k, params.R0
        growth = math.expm1(3.0 * R0)
        if params.case == CaseKind.SUBCRITICAL:
            delta = 2.0 ** (-n / (2 * k)) * (2.0 ** ((n - 2 * k) / (2 * k)) - 1.0)
        elif params.case == CaseKind.SUPERCRITICAL:
            delta = 0.5 * R0 ** ((2 * k - n) / k) * (2.0 ** ((2 * k - n) / (2 * k)) - 1.0)
        else:
            delta = 0.25 * math.log(2.0)
        values = {"delta": delta, "tau0": delta / growth}
        values.update({key: v for key, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def for_ring(cls, domain, outer_radius: float, t0: float = 1.0, t1: float = 1.0,
                 **overrides: Any) -> "GlueParams":
        """Ring defaults: δ = ½, τ₀ keeping τ₀Φ⁰ ≤ ¼ on the outer sphere"""
        r_in, _ = domain.bounding_radii
        tau0 = 0.25 * t0 / math.expm1(t0 * (outer_radius - r_in))
        values = {"delta": 0.5, "t0": t0, "t1": t1, "tau0": tau0}
        values.update({key: v for key, v in overrides.items() if v is not None})
        return cls(**values)


class BoundaryQuadrature(BaseModel):
    """Quadrature of ∂Ω with outward normals and curvature functions H_0,…,H_{n−1}"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    points: np.ndarray = Field(description="(N, n) boundary points")
    normals: np.ndarray = Field(description="(N, n) outward unit normals")
    weights: np.ndarray = Field(description="(N,) surface-measure weights")
    curvatures: np.ndarray = Field(description="(N, n) with column m holding H_m")

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))


ScalarField = Callable[[np.ndarray], np.ndarray]

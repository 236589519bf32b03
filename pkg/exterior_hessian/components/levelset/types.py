from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class LevelSetSample(BaseModel):
    """Quadrature of one level set {u = t}"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float = Field(description="Level height")
    points: np.ndarray = Field(description="(N, n) quadrature points on {u = t}")
    weights: np.ndarray = Field(description="(N,) surface-measure weights")
    grad_norm: np.ndarray = Field(description="(N,) |Du| at the points")
    normals: np.ndarray = Field(description="(N, n) unit normals Du/|Du|")
    curvatures: np.ndarray = Field(description="(N, m) with column j holding H_j, j = 0..min(k, n−1)")
    flux: np.ndarray = Field(description="(N,) S_k^{ij}(D²u)u_iu_j")

    @model_validator(mode="after")
    def _positive_gradient(self) -> "LevelSetSample":
        if np.any(self.grad_norm <= 0):
            raise ValueError("level set sample with vanishing gradient")
        return self

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))

    def curvature(self, m: int) -> np.ndarray:
        if not 0 <= m < self.curvatures.shape[1]:
            raise ValueError(f"H_{m} not available (have H_0..H_{self.curvatures.shape[1] - 1})")
        return self.curvatures[:, m]


class MonotoneSeries(BaseModel):
    ts: List[float]
    values: List[float] = Field(description="I_{a,b,k}(t) at each level")
    shifted_values: List[float] = Field(description="I_{a+a0,b,k}(t) at each level")
    areas: List[float] = Field(description="|S_t| at each level")
    a: float
    b: float
    k: int
    a0: float
    eps: float
    max_forward_increase: float = Field(description="max over s > t of I(s) − I(t), floored at 0")
    drift_constant: Optional[float] = Field(default=None, description="max_forward_increase / ε²")

    @model_validator(mode="after")
    def _standing_choice(self) -> "MonotoneSeries":
        if not np.isclose(self.a, self.b - self.k + 1):
            raise ValueError("monotone series use a = b − k + 1")
        return self


class InequalityReport(BaseModel):
    case: str
    b: float
    lhs: float = Field(description="∫_{∂Ω} |Du|^{b+1} H_{k−1}")
    rhs: float = Field(description="coefficient · ∫_{∂Ω} |Du|^b H_k")
    coefficient: float
    slack: float = Field(description="rhs − lhs")
    gated: bool = Field(description="False when the case is report-only")
    passed: Optional[bool] = None


class CapacityPair(BaseModel):
    volume: float = Field(description="∫ S_k^{ij}u_iu_j dx including the far-field tail")
    truncated_volume: float = Field(description="The same integral over B_R \\ Ω only")
    tail: float = Field(description="Fitted far-field contribution, inf when it diverges")
    tail_exponent: Optional[float] = Field(default=None, description="Fitted power α of the radial density")
    boundary: float = Field(description="∫_{∂Ω} |Du|^k H_{k−1} dA")

    @property
    def gap(self) -> float:
        return abs(self.volume - self.boundary)


class AreaBound(BaseModel):
    t: float
    area: float
    ratio: float = Field(description="|S_t| normalized by the case growth rate")
    within_bound: bool


class AreaBoundSeries(BaseModel):
    rows: List[AreaBound] = Field(default_factory=list)
    growth: float = Field(description="max ratio / min ratio over the samples")
    bounded: bool


class CoareaCheck(BaseModel):
    t_range: List[float]
    volume: float = Field(description="∫ S_k^{ij}u_iu_j dx over {t_min ≤ u ≤ t_max}")
    coarea: float = Field(description="∫ dt ∫_{S_t} S_k^{ij}u_iu_j/|Du| dA")
    relative_error: float
    passed: bool

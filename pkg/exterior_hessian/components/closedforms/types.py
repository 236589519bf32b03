from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CaseKind(str, Enum):
    SUBCRITICAL = "subcritical"      # k < n/2
    CRITICAL = "critical"            # k = n/2
    SUPERCRITICAL = "supercritical"  # n/2 < k ≤ n

    @classmethod
    def from_dims(cls, n: int, k: int) -> "CaseKind":
        if 2 * k < n:
            return cls.SUBCRITICAL
        if 2 * k == n:
            return cls.CRITICAL
        return cls.SUPERCRITICAL

    @property
    def boundary_value(self) -> float:
        """c_case: the Dirichlet value on ∂Ω"""
        return {CaseKind.SUBCRITICAL: -1.0, CaseKind.CRITICAL: 0.0, CaseKind.SUPERCRITICAL: 1.0}[self]


class ProblemParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2, description="Space dimension")
    k: int = Field(ge=1, description="Order of the k-Hessian operator")
    r0: float = Field(gt=0, description="Radius of a ball contained in Ω")
    R0: float = Field(gt=0, description="Ω ⊂ B_{R0/2}; normalization radius of the profiles")
    eps: float = Field(ge=0, description="Regularization ε; 0 is the homogeneous limit")
    R: float = Field(gt=0, description="Outer truncation radius")
    case: Optional[CaseKind] = Field(default=None, description="Derived from (n, k) when omitted")

    @model_validator(mode="before")
    @classmethod
    def _derive_case(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("case") is None and "n" in data and "k" in data:
            data = {**data, "case": CaseKind.from_dims(int(data["n"]), int(data["k"]))}
        return data

    @model_validator(mode="after")
    def _check(self) -> "ProblemParams":
        if self.k > self.n:
            raise ValueError(f"k={self.k} exceeds n={self.n}")
        derived = CaseKind.from_dims(self.n, self.k)
        if self.case != derived:
            raise ValueError(f"case {self.case.value} inconsistent with n={self.n}, k={self.k} ({derived.value})")
        if not self.r0 < self.R0 / 2:
            raise ValueError(f"need r0 < R0/2, got r0={self.r0}, R0={self.R0}")
        if not self.eps < self.R0 / 3:
            raise ValueError(f"need eps < R0/3, got eps={self.eps}, R0={self.R0}")
        if not self.R > self.R0 / 2:
            raise ValueError(f"truncation radius R={self.R} must enclose B_(R0/2)")
        return self

    @property
    def far_truncation(self) -> bool:
        """R > 100(R0 + 1), the regime in which truncated exterior problems are posed"""
        return self.R > 100.0 * (self.R0 + 1.0)

    def with_stage(self, eps: Optional[float] = None, R: Optional[float] = None) -> "ProblemParams":
        data = self.model_dump()
        if eps is not None:
            data["eps"] = eps
        if R is not None:
            data["R"] = R
        return ProblemParams(**data)

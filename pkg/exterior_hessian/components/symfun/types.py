import math
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Spectrum(BaseModel):
    model_config = ConfigDict(frozen=True)

    values: tuple[float, ...] = Field(description="Hessian eigenvalues λ₁,…,λ_n")
    n: int = Field(description="Dimension, equal to len(values)")

    @model_validator(mode="before")
    @classmethod
    def _fill_dimension(cls, data: Any) -> Any:
        if isinstance(data, dict) and "n" not in data and "values" in data:
            data = {**data, "n": len(data["values"])}
        return data

    @field_validator("values", mode="before")
    @classmethod
    def _as_floats(cls, values: Any) -> tuple[float, ...]:
        return tuple(float(v) for v in np.asarray(values, dtype=float).ravel())

    @model_validator(mode="after")
    def _check(self) -> "Spectrum":
        if len(self.values) != self.n:
            raise ValueError(f"spectrum has {len(self.values)} entries, expected n={self.n}")
        if self.n < 2:
            raise ValueError(f"spectrum needs at least two entries, got n={self.n}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("spectrum entries must be finite")
        return self

    @classmethod
    def of(cls, values) -> "Spectrum":
        return cls(values=values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


class SymMatrix(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: np.ndarray = Field(description="n×n symmetric matrix of second derivatives")

    @field_validator("entries", mode="before")
    @classmethod
    def _symmetrize(cls, entries: Any) -> np.ndarray:
        m = np.array(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        return m

    @property
    def n(self) -> int:
        return self.entries.shape[0]

import math
from typing import Any, Callable, Dict, List, Literal, NamedTuple, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from exterior_hessian.components.closedforms import ProblemParams, f_rhs, w_profile
from exterior_hessian.components.subsolution import Ball, ConvexDomain, GlueParams


class RadialGrid(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    mode: Literal["radial"] = "radial"
    n: int = Field(ge=2, description="Space dimension of the radial problem")
    nodes: np.ndarray = Field(description="Node radii ρ_0 = r0 < … < ρ_m = R")

    @field_validator("nodes", mode="before")
    @classmethod
    def _increasing(cls, nodes: Any) -> np.ndarray:
        rho = np.array(nodes, dtype=float)
        if rho.ndim != 1 or rho.size < 3:
            raise ValueError("need at least three radial nodes")
        if np.any(np.diff(rho) <= 0) or rho[0] <= 0:
            raise ValueError("radial nodes must be positive and strictly increasing")
        rho.setflags(write=False)
        return rho

    @property
    def inner_radius(self) -> float:
        return float(self.nodes[0])

    @property
    def outer_radius(self) -> float:
        return float(self.nodes[-1])

    @classmethod
    def geometric(cls, n: int, r0: float, R: float, nodes_per_decade: int) -> "RadialGrid":
        """
        ρ_j = r0·10^{j/nodes_per_decade} closed off by R.

        Grids built for different R share every node below the smaller R.
        """
        ratio = 10.0 ** (1.0 / nodes_per_decade)
        count = max(3, math.ceil(math.log(R / r0) / math.log(ratio)))
        nodes = r0 * ratio ** np.arange(count)
        if R / nodes[-1] < math.sqrt(ratio):
            nodes = nodes[:-1]
        return cls(n=n, nodes=np.append(nodes, R))


class CartesianGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Literal["cartesian"] = "cartesian"
    n: int = Field(ge=2, le=3, description="Space dimension, 2 or 3")
    h: float = Field(gt=0, description="Uniform spacing")
    outer_radius: float = Field(gt=0, description="Radius R of the outer sphere")
    domain: ConvexDomain = Field(description="Inner convex domain Ω")

    @model_validator(mode="after")
    def _check(self) -> "CartesianGrid":
        if self.domain.n != self.n:
            raise ValueError(f"domain dimension {self.domain.n} differs from grid dimension {self.n}")
        if self.domain.bounding_radii[1] + 2 * self.h >= self.outer_radius:
            raise ValueError("outer sphere must clear Ω by at least two cells")
        return self

    @property
    def half_width(self) -> float:
        """Box half-width: R plus two cells so every unknown has a full stencil"""
        return (math.ceil(self.outer_radius / self.h) + 2) * self.h

    @property
    def axis(self) -> np.ndarray:
        count = int(round(self.half_width / self.h))
        return self.h * np.arange(-count, count + 1)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.axis.size,) * self.n

    def coordinates(self) -> np.ndarray:
        return np.stack(np.meshgrid(*([self.axis] * self.n), indexing="ij"), axis=-1)


AnnularGrid = Union[RadialGrid, CartesianGrid]


class BoundaryData(NamedTuple):
    """Dirichlet data and right-hand side of one solve"""
    kind: str                                   # "exterior" or "ring"
    inner_value: float                          # value on ∂Ω
    outer_value: Callable[[np.ndarray], np.ndarray]  # radius ↦ value on/beyond ∂B_R
    rhs: Callable[[np.ndarray], np.ndarray]     # radius ↦ right-hand side
    eps: float = 0.0


def exterior_boundary(params: ProblemParams) -> BoundaryData:
    return BoundaryData(
        kind="exterior",
        inner_value=params.case.boundary_value,
        outer_value=lambda r: np.asarray(w_profile(params, r), dtype=float),
        rhs=lambda r: np.asarray(f_rhs(params, r), dtype=float),
        eps=params.eps,
    )


def ring_boundary(eps: float) -> BoundaryData:
    return BoundaryData(
        kind="ring",
        inner_value=0.0,
        outer_value=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        rhs=lambda r: np.full(np.shape(r), float(eps)),
        eps=eps,
    )


class SolveConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    newton_tol: float = Field(default=1e-9, gt=0, description="Target sup-norm of S_k(D²u) − f")
    max_iter: int = Field(default=60, ge=1, description="Newton iterations per stage")
    damping: float = Field(default=0.5, gt=0, lt=1, description="Backtracking factor")
    max_backtracks: int = Field(default=40, ge=1, description="Step halvings before giving up")
    eps_schedule: List[float] = Field(default_factory=lambda: [1e-2], description="Decreasing ε values")
    R_schedule: List[float] = Field(default_factory=lambda: [1e3], description="Increasing truncation radii")
    gamma_margin: float = Field(default=1e-12, ge=0, description="Floor for S_1,…,S_k during line search (S_k: min(margin, f/2))")
    formulation: Literal["concave", "hessian"] = Field(
        default="concave", description="Newton right-hand side from S_k^{1/k} − f^{1/k} or from S_k − f")
    krylov_tol: float = Field(default=1e-10, gt=0, description="Relative GMRES tolerance")
    krylov_restart: int = Field(default=60, ge=1)
    krylov_maxiter: int = Field(default=40, ge=1, description="GMRES restart cycles before the direct fallback")
    nodes_per_decade: int = Field(default=64, ge=4, description="Radial grading")
    grid_spacing: Optional[float] = Field(default=None, gt=0, description="Cartesian spacing h")

    @field_validator("eps_schedule")
    @classmethod
    def _eps_decreasing(cls, eps: List[float]) -> List[float]:
        if not eps:
            raise ValueError("eps_schedule must not be empty")
        if any(e <= 0 for e in eps):
            raise ValueError("eps_schedule entries must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_schedule must be strictly decreasing")
        return eps

    @field_validator("R_schedule")
    @classmethod
    def _R_increasing(cls, radii: List[float]) -> List[float]:
        if not radii:
            raise ValueError("R_schedule must not be empty")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("R_schedule must be strictly increasing")
        return radii

    @model_validator(mode="after")
    def _aligned(self) -> "SolveConfig":
        lengths = {len(self.eps_schedule), len(self.R_schedule)}
        if len(lengths) > 1 and 1 not in lengths:
            raise ValueError("eps_schedule and R_schedule must have equal length or one entry")
        return self

    def stages(self) -> List[Tuple[float, float]]:
        """(ε_j, R_j) pairs; a one-entry schedule is held fixed"""
        count = max(len(self.eps_schedule), len(self.R_schedule))
        eps = self.eps_schedule * count if len(self.eps_schedule) == 1 else self.eps_schedule
        radii = self.R_schedule * count if len(self.R_schedule) == 1 else self.R_schedule
        return list(zip(eps, radii))


class SolutionField(BaseModel):
    """Solution values on a grid; boundary nodes carry the Dirichlet data"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: np.ndarray = Field(description="u at every grid node (Cartesian: full box, filled outside U)")
    grid: Union[RadialGrid, CartesianGrid] = Field(discriminator="mode")
    params: ProblemParams
    domain: ConvexDomain
    glue: Optional[GlueParams] = None
    kind: Literal["exterior", "ring"] = "exterior"
    ring_eps: Optional[float] = Field(default=None, description="Right-hand side ε of ring mode")

    _discretization: Any = PrivateAttr(default=None)

    @property
    def boundary(self) -> BoundaryData:
        if self.kind == "ring":
            return ring_boundary(self.ring_eps)
        return exterior_boundary(self.params)

    @property
    def discretization(self):
        if self._discretization is None:
            from .utilities.discretization import build_discretization
            self._discretization = build_discretization(self.grid, self.domain, self.boundary)
        return self._discretization

    def with_values(self, values: np.ndarray) -> "SolutionField":
        field = SolutionField(values=values, grid=self.grid, params=self.params, domain=self.domain,
                              glue=self.glue, kind=self.kind, ring_eps=self.ring_eps)
        field._discretization = self._discretization
        return field

    @property
    def unknowns(self) -> np.ndarray:
        return self.discretization.unknown_values(self.values)


class NewtonRecord(BaseModel):
    iteration: int
    residual: float = Field(description="sup |S_k − f| after the step")
    merit: float = Field(description="sup of the formulation residual after the step")
    step_length: float
    step_norm: float
    flagged_nodes: int = Field(description="Nodes outside Γ_k exempted from the cone test")


class SolveReport(BaseModel):
    converged: bool
    iterations: int
    residual: float
    history: List[NewtonRecord] = Field(default_factory=list)
    flagged_nodes: List[int] = Field(default_factory=list, description="Unknown indices exempted at the start")
    subsolution_gap: Optional[float] = Field(default=None, description="min(u − u̲) over the unknowns")


class StageRecord(BaseModel):
    stage: int
    eps: float
    R: float
    iterations: int
    residual: float
    probe_delta: Optional[float] = Field(default=None, description="sup change on the probe radii vs the previous stage")
    probe_values: List[float] = Field(default_factory=list)
    converged: bool


class ContinuationReport(BaseModel):
    stages: List[StageRecord] = Field(default_factory=list)
    probe_radii: List[float] = Field(default_factory=list)
    limit_converged: bool = False
    failed_stage: Optional[int] = None
    error: Optional[str] = None


class ShellRow(BaseModel):
    radius: float
    value_scaled: Optional[float] = Field(default=None, description="(−u)|x|^{(n−2k)/k} (Subcritical)")
    green_gap: Optional[float] = Field(default=None, description="|u − green| (Critical/Supercritical)")
    gradient_scaled: float = Field(description="|Du|·|x|^{(n−k)/k}")
    hessian_scaled: float = Field(description="|D²u|·|x|^{n/k}")
    P: Optional[float] = None
    radial_derivative_scaled: float = Field(description="x·Du·|x|^{n/k−2} (·1 in the Critical case)")
    gamma_min: float = Field(description="min_i S_i over the shell, i ≤ k")
    subsolution_gap: Optional[float] = Field(default=None, description="min(u − u̲) over the shell")
    barrier_gap: Optional[float] = Field(default=None, description="min(ρ^{ε,R} − u) over the shell")


class DiagnosticsReport(BaseModel):
    case: str
    rows: List[ShellRow] = Field(default_factory=list)
    checks: Dict[str, bool] = Field(default_factory=dict)
    summary: Dict[str, float] = Field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.checks.values())


class OrderingReport(BaseModel):
    holds: bool
    worst_violation: float = Field(description="max(lower − upper) over common nodes")
    worst_index: Optional[int] = None

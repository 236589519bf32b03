import os
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_core import PydanticCustomError

from exterior_hessian.components.closedforms import CaseKind, ProblemParams, inequality_threshold
from exterior_hessian.components.subsolution import GlueParams, parse_domain
from exterior_hessian.components.solver import (
    SolveConfig,
    cartesian_grid_factory,
    radial_grid_factory,
)


_SCHEDULE_FIELDS = {"eps_schedule": "schedules.eps", "R_schedule": "schedules.R"}


def _invalid(field: str, message: str) -> PydanticCustomError:
    """Model-level error carrying the dotted config field it concerns"""
    return PydanticCustomError("run_config", "{message}", {"field": field, "message": message})


class ProblemBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(ge=2, description="Space dimension")
    k: int = Field(ge=1, description="Order of the k-Hessian")
    case: Optional[CaseKind] = Field(default=None, description="Checked against the case derived from (n, k)")
    r0: float = Field(gt=0, description="Radius of a ball inside Ω")
    R0: float = Field(gt=0, description="Ω ⊂ B_{R0/2}")

    @model_validator(mode="after")
    def _case_matches(self) -> "ProblemBlock":
        if self.k > self.n:
            raise ValueError(f"k={self.k} exceeds n={self.n}")
        derived = CaseKind.from_dims(self.n, self.k)
        if self.case is not None and self.case != derived:
            raise ValueError(f"case {self.case.value} contradicts n={self.n}, k={self.k} ({derived.value})")
        return self


class DomainBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape: Literal["ball", "ellipsoid", "support"] = "ball"
    center: Optional[List[float]] = None
    radius: Optional[float] = None
    semi_axes: Optional[List[float]] = None
    support: Optional[List[float]] = None


class SchedulesBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eps: List[float] = Field(description="Decreasing ε values")
    R: List[float] = Field(description="Increasing truncation radii")


class SolverBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["radial", "cartesian"] = "radial"
    newton_tol: float = 1e-9
    max_iter: int = 60
    damping: float = 0.5
    max_backtracks: int = 40
    gamma_margin: float = 1e-12
    formulation: Literal["concave", "hessian"] = "concave"
    krylov_tol: float = 1e-10
    krylov_restart: int = 60
    krylov_maxiter: int = 40
    nodes_per_decade: int = 64
    grid_spacing: Optional[float] = None


class SubsolutionBlock(BaseModel):
    """Overrides of the gluing defaults; omitted entries keep the case values"""
    model_config = ConfigDict(extra="forbid")

    delta: Optional[float] = Field(default=None, gt=0)
    tau0: Optional[float] = Field(default=None, gt=0)
    t0: Optional[float] = Field(default=None, gt=0)
    t1: Optional[float] = Field(default=None, gt=0)
    K1: Optional[float] = Field(default=None, gt=0)


class AnalysisBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    b_values: List[float] = Field(default_factory=list, description="Exponents for the boundary inequality")
    t_grid: List[float] = Field(default_factory=list, description="Levels for the monotone and area series")
    probe_radii: Optional[List[float]] = None
    ring_eps: List[float] = Field(default_factory=list, description="ε values of the ring family")
    out_dir: Optional[str] = Field(default=None, description="Report directory; settings.out_dir when omitted")
    checkpoint: Optional[str] = Field(default=None, description="Checkpoint path; <out_dir>/checkpoint.npz when omitted")
    threads: Optional[int] = Field(default=None, ge=1)
    boundary_resolution: int = Field(default=64, ge=8)


class RunConfig(BaseModel):
    """A complete run description, one block per config section"""
    model_config = ConfigDict(extra="forbid")

    problem: ProblemBlock
    domain: DomainBlock = Field(default_factory=DomainBlock)
    schedules: SchedulesBlock
    solver: SolverBlock = Field(default_factory=SolverBlock)
    subsolution: SubsolutionBlock = Field(default_factory=SubsolutionBlock)
    analysis: AnalysisBlock = Field(default_factory=AnalysisBlock)

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        try:
            config = self.solve_config()
        except ValidationError as e:
            error = e.errors()[0]
            name = str(error["loc"][0]) if error["loc"] else None
            field = _SCHEDULE_FIELDS.get(name, f"solver.{name}") if name else "schedules"
            raise _invalid(field, error["msg"])

        try:
            stages = [self.base_params().with_stage(eps, R) for eps, R in config.stages()]
        except ValidationError as e:
            raise _invalid("problem", e.errors()[0]["msg"])
        params = stages[0]

        try:
            domain = self.domain_model()
        except ValidationError as e:
            raise _invalid("domain", e.errors()[0]["msg"])
        if domain.n != params.n:
            raise _invalid("domain", f"domain dimension {domain.n} differs from n={params.n}")

        if self.solver.mode == "radial":
            if self.domain.shape != "ball" or any(c != 0.0 for c in domain.center) \
                    or domain.radius != params.r0:
                raise _invalid("domain", "radial mode needs a ball of radius r0 centred at the origin")
        else:
            if self.solver.grid_spacing is None:
                raise _invalid("solver.grid_spacing", "cartesian mode needs a grid spacing")
            if params.n not in (2, 3):
                raise _invalid("solver.mode", "cartesian mode supports n = 2 or 3")

        threshold = inequality_threshold(params)
        for b in self.analysis.b_values:
            if params.case == CaseKind.SUBCRITICAL and b < threshold:
                raise _invalid("analysis.b_values",
                               f"b={b} violates the hypothesis b >= k(n-k-1)/(n-k) = {threshold:.6g}")
            if params.case == CaseKind.CRITICAL and not b > threshold:
                raise _invalid("analysis.b_values", f"b={b} violates the hypothesis b > n/2 - 1 = {threshold:.6g}")
        return self

    def solve_config(self) -> SolveConfig:
        s = self.solver
        return SolveConfig(
            newton_tol=s.newton_tol, max_iter=s.max_iter, damping=s.damping, max_backtracks=s.max_backtracks,
            eps_schedule=self.schedules.eps, R_schedule=self.schedules.R, gamma_margin=s.gamma_margin,
            formulation=s.formulation, krylov_tol=s.krylov_tol, krylov_restart=s.krylov_restart,
            krylov_maxiter=s.krylov_maxiter, nodes_per_decade=s.nodes_per_decade, grid_spacing=s.grid_spacing,
        )

    def base_params(self) -> ProblemParams:
        p = self.problem
        return ProblemParams(n=p.n, k=p.k, r0=p.r0, R0=p.R0, eps=self.schedules.eps[0], R=self.schedules.R[0])

    def domain_model(self):
        d = self.domain
        n = self.problem.n
        center = tuple(d.center) if d.center is not None else (0.0,) * n
        if d.shape == "ball":
            return parse_domain({"shape": "ball", "center": center,
                                 "radius": d.radius if d.radius is not None else self.problem.r0})
        if d.shape == "ellipsoid":
            return parse_domain({"shape": "ellipsoid", "center": center, "semi_axes": d.semi_axes})
        return parse_domain({"shape": "support", "support": d.support})

    def grid_factory(self):
        config = self.solve_config()
        if self.solver.mode == "radial":
            return radial_grid_factory(config)
        return cartesian_grid_factory(config, self.domain_model())

    def out_dir(self, default: str) -> str:
        return self.analysis.out_dir or default

    def checkpoint_path(self, out_dir: str) -> str:
        return self.analysis.checkpoint or os.path.join(out_dir, "checkpoint.npz")

    def glue(self, params: ProblemParams) -> GlueParams:
        s = self.subsolution
        return GlueParams.for_case(params, delta=s.delta, tau0=s.tau0, t0=s.t0, t1=s.t1, K1=s.K1)

    def ring_glue(self, domain, outer_radius: float) -> GlueParams:
        s = self.subsolution
        return GlueParams.for_ring(domain, outer_radius, t0=s.t0 or 1.0, t1=s.t1 or 1.0,
                                   delta=s.delta, tau0=s.tau0, K1=s.K1)

from .types import CaseKind, ProblemParams
from .profiles import (
    ball_capacity,
    barrier_slope,
    decay_exponents,
    exact_solution,
    exact_solution_derivatives,
    f_constant,
    f_rhs,
    gradient_weight,
    green,
    green_exponent,
    inequality_threshold,
    lower_barrier_subcritical,
    monotone_shift_a0,
    monotone_weight_g,
    outer_barrier,
    radial_sk,
    sphere_area,
    unit_sphere_area,
    upper_barrier,
    w_profile,
    w_profile_derivatives,
)

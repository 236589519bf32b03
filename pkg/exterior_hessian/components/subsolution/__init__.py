from .types import Ball, BoundaryQuadrature, ConvexDomain, Ellipsoid, GlueParams, SupportSampled, parse_domain
from .builder import (
    build_ring_subsolution,
    build_subsolution,
    check_glue,
    check_ring_glue,
    phi_zero,
    ring_subsolution_derivatives,
    signed_distance,
    smooth_abs,
    smooth_max,
    smooth_max_derivatives,
    smooth_max_values,
    subsolution_derivatives,
)
from .utilities.domains import boundary_quadrature, distance_gradient, distance_hessian, signed_distance_array

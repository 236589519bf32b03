from .types import (
    AreaBound,
    AreaBoundSeries,
    CapacityPair,
    CoareaCheck,
    InequalityReport,
    LevelSetSample,
    MonotoneSeries,
)
from .analysis import (
    I_abk,
    I_abk_by_curvature,
    area_bound_check,
    area_bound_series,
    boundary_terms,
    capacity_pair,
    coarea_check,
    curvature_from_hessian,
    extract,
    extract_many,
    forward_increase_ratio,
    inequality_report,
    max_forward_increase,
    monotone_series,
)
from .reports import (
    write_decay_csv,
    write_diagnostics_csv,
    write_inequality_csv,
    write_ordering_csv,
    write_series_csv,
    write_table,
)
from .utilities.extraction import FieldSampler, level_curvatures, marching_squares, sk_flux

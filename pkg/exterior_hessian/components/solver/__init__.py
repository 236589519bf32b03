from .types import (
    AnnularGrid,
    BoundaryData,
    CartesianGrid,
    ContinuationReport,
    DiagnosticsReport,
    NewtonRecord,
    OrderingReport,
    RadialGrid,
    ShellRow,
    SolutionField,
    SolveConfig,
    SolveReport,
    StageRecord,
    exterior_boundary,
    ring_boundary,
)
from .engine import (
    cone_failures,
    cone_floors,
    hessian_at,
    linearization,
    newton_step,
    ordering_report,
    residual,
    solve,
    solve_ring,
    subsolution_values,
)
from .continuation import (
    cartesian_grid_factory,
    continue_to_limit,
    default_probe_radii,
    radial_grid_factory,
    ring_family,
    warm_start,
)
from .diagnostics import diagnostics, node_derivatives
from .utilities.checkpoint import CHECKPOINT_FORMAT, config_digest, load_checkpoint, save_checkpoint
from .utilities.interpolation import sample_on_axis, sample_points

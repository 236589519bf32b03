from .types import (
    AnalysisBlock,
    DomainBlock,
    ProblemBlock,
    RunConfig,
    SchedulesBlock,
    SolverBlock,
    SubsolutionBlock,
)
from .config_io import load_config, parse_config, serialize_config

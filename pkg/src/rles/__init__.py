"""Large-eddy simulation of turbulent channel flow with rational subfilter models."""

__version__ = "0.1.0"

from .errors import (CheckpointError, ComparisonError, ConfigurationError, EmptyStatisticsError,
                     MappingError, ReferenceDataError, RepresentationError, RlesError,
                     SolverDivergenceError, UndefinedCorrelationError)
from .filters import FilterParams, helmholtz_inverse, transfer_function
from .grid import ChannelGrid, GridConfig, PeriodicBox, build_grid
from .sgs import SgsConfig
from .solver import ChannelSolver, RunConfig, SolverState

__all__ = [
    "ChannelGrid", "ChannelSolver", "CheckpointError", "ComparisonError", "ConfigurationError",
    "EmptyStatisticsError", "FilterParams", "GridConfig", "MappingError", "PeriodicBox",
    "ReferenceDataError", "RepresentationError", "RlesError", "RunConfig", "SgsConfig",
    "SolverDivergenceError", "SolverState", "UndefinedCorrelationError", "build_grid",
    "helmholtz_inverse", "transfer_function",
]

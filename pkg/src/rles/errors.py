"""Exception types raised across the package."""


class RlesError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RlesError, ValueError):
    """Invalid configuration value; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class RepresentationError(RlesError):
    """Field is in the wrong (physical/spectral) representation."""


class SolverDivergenceError(RlesError, FloatingPointError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step, max_u_history):
        self.step = step
        self.max_u_history = list(max_u_history)
        tail = ", ".join(f"{s}:{m:.3e}" for s, m in self.max_u_history[-5:])
        super().__init__(f"solution diverged at step {step} (recent max|u|: {tail})")


class EmptyStatisticsError(RlesError):
    """Statistics finalized before any sample was accumulated."""


class UndefinedCorrelationError(RlesError):
    """Correlation requested for a field with zero variance."""

    def __init__(self, component):
        self.component = component
        super().__init__(f"correlation undefined for component {component}: zero variance")


class CheckpointError(RlesError):
    """Corrupt, truncated or incompatible checkpoint file."""


class ReferenceDataError(RlesError):
    """Reference profile file could not be parsed or mapped."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class MappingError(ReferenceDataError):
    """Column mapping descriptor is malformed or incomplete."""


class ComparisonError(RlesError):
    """Run and reference profiles cannot be compared."""

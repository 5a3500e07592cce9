"""Exception hierarchy shared across the package."""


class PortiloopError(Exception):
    """Base class for all package errors."""


class ParameterError(PortiloopError, ValueError):
    """An argument or configuration value is outside its valid domain."""


class ShapeError(PortiloopError, ValueError):
    """Array dimensions do not match what an operation expects."""


class DataError(PortiloopError, ValueError):
    """Input data violates a structural precondition (e.g. overlapping intervals)."""


class FormatError(PortiloopError, ValueError):
    """A serialized file is truncated, corrupt, or incompatible."""


class ContractError(PortiloopError, RuntimeError):
    """A call sequence violated a stateful object's contract."""


class TrainingError(PortiloopError, RuntimeError):
    """Training diverged. ``diagnostics`` carries the state at failure."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SearchExhaustedError(PortiloopError, RuntimeError):
    """The candidate sampler could not find a valid, untested hyperparameter set."""

"""Exception hierarchy shared across the package."""


class RandSelError(Exception):
    """Base class for all package errors."""


class InputError(RandSelError, ValueError):
    """Malformed or non-finite input data."""


class ParameterError(RandSelError, ValueError):
    """A parameter is outside its valid range."""


class DegenerateLabelError(RandSelError, ValueError):
    """Label vector has a single class, so its centered kernel vanishes."""


class DegenerateKernelError(RandSelError, ValueError):
    """A centered kernel has (numerically) zero Frobenius norm."""


class ClassCoverageError(RandSelError, ValueError):
    """Balanced sampling requested but a class has no samples."""


class CoverageError(RandSelError):
    """A feature was not covered by enough tasks on one side of the estimator."""

    def __init__(self, message, features=()):
        super().__init__(message)
        self.features = tuple(features)


class ConfigurationError(RandSelError, ValueError):
    """The run configuration cannot be satisfied."""


class NumericError(RandSelError, ArithmeticError):
    """A linear solve produced non-finite or inaccurate output."""


class InfeasibleError(RandSelError):
    """The linear program has an empty feasible region."""


class LpSolverError(RandSelError):
    """Simplex failure: unbounded program or iteration cap reached."""


class SchemaError(RandSelError, ValueError):
    """Artifact file has a missing or unknown schema version, or bad layout."""


class SelectionFinished(RandSelError):
    """Raised when too few active features remain to build a task pair."""

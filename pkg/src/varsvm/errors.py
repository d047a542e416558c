"""Exception types raised by the solvers and the I/O layer."""


class VarSVMError(Exception):
    """Base class for all package errors."""


class InvalidHyperplaneError(VarSVMError, ValueError):
    """The normal vector is zero (or not finite)."""


class MissingClassError(VarSVMError, ValueError):
    """An operation needs a class label that has no members."""


class DataError(VarSVMError, ValueError):
    """Malformed dataset: bad shape, non-finite values or illegal labels."""


class SpecError(VarSVMError, ValueError):
    """Malformed generator spec or configuration."""


class CompatibilityError(VarSVMError, ValueError):
    """Model and data disagree (dimension, format version, unknown fields)."""


class ConvergenceError(VarSVMError, RuntimeError):
    """Iteration budget exhausted; ``model`` holds the best iterate found."""

    def __init__(self, message, model=None):
        super().__init__(message)
        self.model = model

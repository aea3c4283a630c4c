"""Exception types raised by the solvers and the I/O layer."""


class HyperwaveError(Exception):
    """Base class for all package errors."""


class ConfigError(HyperwaveError, ValueError):
    """Invalid experiment configuration.  ``errors`` lists every violation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class FieldFormatError(HyperwaveError, ValueError):
    """Malformed or mismatched field file."""


class SolverError(HyperwaveError, RuntimeError):
    """A time integration could not be carried out."""


class CFLViolation(SolverError):
    """Time step exceeds the explicit stability limit."""


class BlowUp(SolverError):
    """Non-finite state encountered; ``step`` is the offending time index."""

    def __init__(self, step, what="solution"):
        self.step = step
        super().__init__(f"non-finite {what} at time step {step}")

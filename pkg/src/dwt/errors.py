"""Exception hierarchy shared by all modules."""


class DWTError(Exception):
    """Base class for toolkit errors."""


class DomainError(DWTError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedLawError(DWTError):
    """The dispersion law does not support the requested operation."""


class UnsupportedOrderError(DWTError):
    """Operation only defined for triad clusters."""


class BudgetExceeded(DWTError):
    """Enumeration did not finish inside the configured time budget."""

    def __init__(self, message, elapsed=None):
        super().__init__(message)
        self.elapsed = elapsed


class IntegrationFailure(DWTError):
    """Adaptive integration could not continue; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class QuadratureError(DWTError):
    pass


class InsufficientDataError(DWTError):
    pass


class DivergenceError(DWTError):
    """A series or cascade quantity has no finite value."""

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula or map is defined."""


class CapacityError(RuntimeError):
    """A requested size exceeds a configured enumeration or integer limit."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class CompatibilityError(ValueError):
    """A boundary field fails the compatibility equation beyond tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

"""Exception hierarchy shared by the design, simulation and planning layers."""


class CraneError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(CraneError, ValueError):
    pass


class DomainError(CraneError, ValueError):
    pass


class DegenerateScalingError(CraneError):
    """The scaling function b(t) touched zero, so the frequency is undefined."""


class InfeasibleHoistError(CraneError):
    """The rope-length ODE failed or drove l(t) through zero."""


class NonConvergenceError(CraneError):
    def __init__(self, message, best_residual=None, iterations=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class DegenerateDesignError(CraneError):
    pass


class OverTheTopError(CraneError):
    """The pendulum energy corresponds to rotation rather than libration."""

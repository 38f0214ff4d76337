"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid grid, potential, schedule or experiment parameters."""


class GridMismatchError(ValueError):
    """Fields defined on different grids were combined."""


class ScheduleDomainError(ValueError):
    """Time outside the range covered by a sweep schedule."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance.

    Carries the iteration history (e.g. chemical potential or residual
    norms) so callers can diagnose stagnation.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history


class PropagationError(RuntimeError):
    """Time propagation produced NaN/overflow amplitudes or lost unitarity."""


class NoCrossingError(RuntimeError):
    """No interior local minimum of the level gap along a scan."""

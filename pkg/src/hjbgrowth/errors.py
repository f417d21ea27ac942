"""Exception types shared across modules."""


class DomainError(ValueError):
    """Argument outside the domain of a model primitive (negative stock, boundary point, ...)."""


class NumericError(RuntimeError):
    """A numerical routine could not produce a trustworthy answer (e.g. bracketing failed)."""


class IntegrationError(RuntimeError):
    """ODE integration stopped before the requested horizon.

    ``last_t`` and ``last_y`` hold the last accepted state.
    """

    def __init__(self, message, last_t=None, last_y=None):
        super().__init__(message)
        self.last_t = last_t
        self.last_y = last_y


class ConvergenceError(RuntimeError):
    """Policy iteration did not converge; carries the last iterate and residual history."""

    def __init__(self, message, last_values=None, history=None):
        super().__init__(message)
        self.last_values = last_values
        self.history = list(history or [])


class CertificationError(RuntimeError):
    """A converged value function failed its monotonicity/concavity certificate."""


class GridExtensionError(ValueError):
    """A state left (or started outside) the computational grid."""

    def __init__(self, message, suggested_bounds=None):
        super().__init__(message)
        self.suggested_bounds = suggested_bounds

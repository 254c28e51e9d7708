"""Exception hierarchy shared by all modules."""


class DomainError(ValueError):
    """Argument outside the domain of an operation (non-finite input, t < 0, ...)."""


class ConfigError(ValueError):
    """Invalid scenario or run configuration."""


class StiffnessError(ConfigError):
    """Explicit step rejected: the step size exceeds the Lipschitz-stability bound."""


class StepSizeError(ConfigError):
    """Quasi-monotone step rejected because dt * k >= 1."""


class NumericalError(RuntimeError):
    """An iterative kernel failed to converge.

    ``context`` carries whatever locates the failure (node index, time step).
    """

    def __init__(self, message, **context):
        self.context = context
        self.reason = message
        if context:
            detail = ", ".join(f"{k}={v}" for k, v in context.items())
            message = f"{message} ({detail})"
        super().__init__(message)

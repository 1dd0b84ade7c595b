"""Exception types."""


class ConfigurationError(ValueError):
    """Inconsistent parameters, dimensions or config file contents."""


class UnboundedPowerError(ArithmeticError):
    """An eigen-channel with positive gain has a zero dual price.

    The inner maximization of the Lagrangian has no finite solution for the
    given multipliers.
    """

    def __init__(self, terminal: int, stream: int):
        super().__init__(f"zero dual price on stream {stream} of terminal {terminal}")
        self.terminal = terminal
        self.stream = stream


class InfeasibleError(RuntimeError):
    """The power-independent parts of the constraints already exceed their bounds."""

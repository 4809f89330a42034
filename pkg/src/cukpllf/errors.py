"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Malformed or invalid scenario configuration.

    ``key`` holds the dotted path of the offending entry (``"op.d"``).
    """

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class SimulationError(RuntimeError):
    pass


class ChatterError(SimulationError):
    """Raised when the switch toggles faster than the dwell guard allows."""

    def __init__(self, t, j, count, window):
        self.t = t
        self.j = j
        self.count = count
        self.window = window
        super().__init__(
            f"chattering at t={t:.6e} s on index j={j}: "
            f"{count} toggles within {window:.3e} s"
        )


class InsufficientDataError(SimulationError):
    pass


class ParameterError(ValueError):
    """Invalid value for a named model or configuration field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field} {message}")

"""Exception hierarchy.

Configuration-type problems derive from :class:`ValueError`; numerical
breakdowns derive from :class:`ArithmeticError`. The CLI maps the former to
exit code 2 and the latter to exit code 3.
"""


class ParameterError(ValueError):
    """Invalid physical or control parameters."""


class DomainError(ValueError):
    """Argument outside the domain of a function (time, frequency, ...)."""


class ContractError(ValueError):
    """Two inputs that must agree (grids, parameters) do not."""


class ConfigError(ParameterError):
    """Malformed scenario configuration. ``path`` names the offending key."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalError(ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""


class StabilityError(NumericalError):
    """Fixed-step integration would be unstable at the requested step."""

    def __init__(self, message, suggested_dt=None):
        self.suggested_dt = suggested_dt
        super().__init__(message)


class PhysicalityError(NumericalError):
    """Amplitudes left the physical region |A1|^2 + |A2|^2 <= 1."""

    def __init__(self, message, time=None):
        self.time = time
        super().__init__(message)


"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ParameterError(ValueError):
    """One or more model parameters violate their invariants.

    ``problems`` holds every violated constraint, not just the first.
    """

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class UnsupportedConfiguration(ValueError):
    """The requested evaluation path does not support this configuration."""


class NumericalError(ArithmeticError):
    """An integral failed to converge or produced a non-finite value."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's preconditions."""


class InvalidGeometryError(InvalidArgumentError):
    """A waveguide layout would need a non-positive width or length."""


class NumericError(RuntimeError):
    """A numerical procedure failed to converge or found no solution.

    ``diagnostics`` carries whatever the failing routine could report
    (scanned brackets, residuals, ...).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

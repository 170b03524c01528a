"""Exception types shared across the package."""


class QuadratureError(RuntimeError):
    """An integral did not converge to the requested accuracy."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (error estimate {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class TruncationError(RuntimeError):
    """A series tail exceeds its certified mass at the requested cutoff."""


class UnsupportedSourceError(ValueError):
    """The source distribution lacks a recipe required by the operation."""


class CertificationError(ValueError):
    """A test function failed bounded-Lipschitz certification."""

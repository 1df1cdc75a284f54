"""Exception types shared across the package."""


class PrecisionLossError(RuntimeError):
    """A computed quantity failed a numerical-accuracy contract.

    Raised when truncation tails, imaginary leakage or range checks show
    that the requested quantity cannot be trusted at the configured
    resolution.
    """


class UnderResolvedError(PrecisionLossError):
    """An internal consistency identity was violated beyond tolerance.

    Signals that the quadrature grid is too coarse for the requested
    configuration (e.g. a non-positive determinant or a trace-identity
    failure).
    """


class GridDegeneracyError(ValueError):
    """Two distinct quadrature nodes (nearly) coincide."""


class CostGuardError(ValueError):
    """Refusing a computation whose cost grows exponentially with input size."""

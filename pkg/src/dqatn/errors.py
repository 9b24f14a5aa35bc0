"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Raised when tensor or operator dimensions are inconsistent."""


class CapacityError(ValueError):
    """Raised when a dense or enumerative operation exceeds its size cap."""


class NumericalConsistencyError(ArithmeticError):
    """Raised when a quantity that must be real or non-negative is not."""


class CircuitFormatError(ValueError):
    """Raised when a circuit or state file cannot be parsed.

    Parameters
    ----------
    message : str
        Description of the problem.
    position : str, optional
        Location inside the document, e.g. ``"layers[0][2].unitary"``.
    """

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at {position})"
        super().__init__(message)


class RunAborted(RuntimeError):
    """Raised when an evolution stops early; carries the partial record."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record

"""Exception hierarchy used across the package."""


class BCTError(Exception):
    """Base class for all errors raised by bctree."""


class StructureError(BCTError, ValueError):
    """A context tree violates properness or prefix-freeness."""


class DomainError(BCTError, ValueError):
    """An argument is outside the domain of the operation."""


class DataError(BCTError, ValueError):
    """Input data is malformed (bad symbols, empty series, ...)."""


class CapacityError(BCTError, RuntimeError):
    """The requested computation exceeds a configured size guard."""


class EstimationError(BCTError, ArithmeticError):
    """A functional evaluated on a posterior sample was not finite.

    Attributes
    ----------
    index : int
        Position of the offending sample in the stream.
    value : float
        The non-finite value.
    """

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"functional returned non-finite value {value!r} at sample {index}")

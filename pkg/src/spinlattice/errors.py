"""Exception types raised across the package."""


class SpinLatticeError(Exception):
    """Base class for all package errors."""


class InvalidSpec(SpinLatticeError, ValueError):
    pass


class DimensionMismatch(SpinLatticeError, ValueError):
    pass


class WrongLatticeKind(SpinLatticeError, ValueError):
    pass


class UnusedCoupling(SpinLatticeError, ValueError):
    """A coupling that the lattice kind does not use is nonzero."""


class NonPositiveTemperature(SpinLatticeError, ValueError):
    pass


class NonPositiveCoupling(SpinLatticeError, ValueError):
    pass


class SingularCoupling(SpinLatticeError, ValueError):
    pass


class FieldNotSupported(SpinLatticeError, ValueError):
    pass


class InvalidTolerance(SpinLatticeError, ValueError):
    pass


class TooLarge(SpinLatticeError, ValueError):
    pass


class ParseError(SpinLatticeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(SpinLatticeError, ValueError):
    pass

"""Exception types shared across the package."""


class MonopoleError(Exception):
    """Base class for all package errors."""


class DegeneracyError(MonopoleError, ValueError):
    """The requested quantity is undefined at this parameter point."""


class DegeneratePointError(DegeneracyError):
    """Position where the magnetic field vanishes (the kink at z = 0)."""


class DegenerateTrapError(DegeneracyError):
    """Vanishing trap frequency; the z-sector has no ground state."""


class DegenerateFieldError(DegeneracyError):
    """Vanishing magnetic field; transverse saturation is undefined."""


class ModeDomainError(DegeneracyError):
    """Signed (original) saturation would produce a negative variance."""


class NotLinearError(MonopoleError, ValueError):
    """The moment system is bilinear for this field and has no constant generator."""


class NumericalError(MonopoleError, ArithmeticError):
    """Integration or evaluation produced non-finite values or underflowed.

    ``t`` and ``state`` hold the last good time and state when available;
    ``trajectory`` holds the partial trajectory accumulated before failure.
    """

    def __init__(self, message, t=None, state=None, trajectory=None):
        super().__init__(message)
        self.t = t
        self.state = state
        self.trajectory = trajectory

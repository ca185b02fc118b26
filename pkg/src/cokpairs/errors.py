"""Shared exception types."""


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured size budget.

    Raised instead of silently truncating: experiments must fail loudly.
    """


class NotInSpan(ValueError):
    """Target vector is not in the rational column span of the matrix."""


class NotSymmetric(ValueError):
    """Operation requires a symmetric matrix."""


class NotInDual(ValueError):
    """Rational vector does not represent an element of the dual cokernel."""


class NotALift(ValueError):
    """Claimed lift does not project to the given homomorphism."""


class UnbalancedDistribution(ValueError):
    """Entry distribution fails its declared balance certificate."""

"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside the region where a formula or construction is defined."""


class InfeasibleError(DomainError):
    """Requested disc parameters violate a feasibility condition."""


class InternalError(RuntimeError):
    """A numerical postcondition failed; indicates a bug or float breakdown."""


class CertificationError(RuntimeError):
    """No candidate disc could be certified to lie inside the ellipsoid."""


class VerificationError(AssertionError):
    """A verified property of the metric did not hold numerically."""

"""Exception types shared across the package."""


class WhichWayError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(WhichWayError, ValueError):
    """Operands have incompatible or invalid dimensions."""


class PositivityError(WhichWayError, ValueError):
    """A matrix required to be Hermitian positive semidefinite is not."""


class SupportError(WhichWayError, ValueError):
    """A rank-one combination leaks outside the support of the state factors,
    so the contraction factorization does not exist."""


class ContractionError(WhichWayError, ValueError):
    """The reconstructed operator violates U^dag U <= 1 beyond tolerance."""


class ConventionError(WhichWayError, ValueError):
    """No member of the documented Jones-convention family reproduces the
    requested wave-plate program."""


class NumericalError(WhichWayError, RuntimeError):
    """A numerical procedure failed to converge or produced an inconsistent
    result (e.g. the two visibility computation routes disagree)."""

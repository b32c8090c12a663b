"""Exception types shared across the package."""


class CoarseDimError(Exception):
    """Base class for errors raised by coarsedim."""


class BudgetExceeded(CoarseDimError):
    """An enumeration or pair loop would exceed its point/pair budget."""


class InsufficientData(CoarseDimError):
    """Too few nonzero count rows to fit a slope."""


class CertificateInvalid(CoarseDimError):
    """A certificate does not match the cloud it is applied to."""


class ApertureTooWide(CoarseDimError, ValueError):
    """Wedge aperture reaches the perpendicular direction (eps >= sqrt 2)."""


class ConfigError(CoarseDimError, ValueError):
    """Malformed generator expression, grid or command configuration."""

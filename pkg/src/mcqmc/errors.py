"""Exception hierarchy shared across the package.

Public functions raise these instead of bare ValueError so callers (and the
CLI exit-code mapping) can tell input mistakes apart from broken numerical
certificates.
"""


class McqmcError(Exception):
    """Base class for all package errors."""


class DimensionError(McqmcError, ValueError):
    """An input has the wrong dimension for the object it is paired with."""


class DomainError(McqmcError, ValueError):
    """A numeric input lies outside the documented domain."""


class BoundaryError(DomainError):
    """A chain start sits on (or within tolerance of) the support boundary."""


class InvalidStateError(DomainError):
    """A chain state is incompatible with the target (e.g. zero density)."""


class ParameterError(McqmcError, ValueError):
    """Structurally invalid parameters (non-coprime bases, r not a d-th power, ...)."""


class SizeError(McqmcError, ValueError):
    """A size/cost guard tripped; the message names the cheaper alternative."""


class BudgetError(McqmcError, ValueError):
    """A construction would exceed the configured memory budget."""


class CapabilityError(McqmcError, NotImplementedError):
    """The requested combination is documented as unsupported."""


class ToleranceError(McqmcError, ValueError):
    """A Monte Carlo budget is too small to certify the requested tolerance."""


class CertificateError(McqmcError):
    """A numerical certificate (ergodicity, mesh norm, cover gap) failed."""


class QuadratureError(McqmcError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class ConfigError(McqmcError, ValueError):
    """An experiment config file is missing, unparseable, or inconsistent."""


class SchemaError(McqmcError, ValueError):
    """A CSV file does not match the schema expected by the consumer."""

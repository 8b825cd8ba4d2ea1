"""
Error hierarchy for projave.
Services catch these per row; the CLI turns them into failed report rows.
"""


class ProjaveError(Exception):
    """Base class for every error raised by the library."""


class DomainError(ProjaveError, ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class PreconditionError(DomainError):
    """Inputs violate an operation precondition (odd measure, non-spanning support, ...)."""


class IntegrationError(ProjaveError):
    """A quadrature rule met a non-finite integrand value."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class DegenerateInputError(ProjaveError):
    """A functional, norm or support value that must be positive was not."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InvalidPolytopeError(ProjaveError, ValueError):
    """Facet data inconsistent with the vertex set, or origin not interior."""

    def __init__(self, message, facet=None):
        super().__init__(message)
        self.facet = facet


class ConfigurationError(ProjaveError):
    """Malformed run config, profile or body description."""

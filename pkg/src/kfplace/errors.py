"""Exception types shared across the package and mapped to HTTP / exit codes."""

from __future__ import annotations


class KfplaceError(Exception):
    """Base class for errors raised by this package."""


class InfeasibleError(KfplaceError):
    """No decision satisfies the budget constraints."""


class DivergenceError(KfplaceError):
    """Fixed-point iteration failed to converge within the iteration cap.

    Carries the last iterate and the number of iterations performed.
    """

    def __init__(self, message, last_iterate=None, iterations=0):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations


class InstabilityError(KfplaceError):
    """A matrix required to be stable has spectral radius >= 1."""

    def __init__(self, message, spectral_radius=None):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class SizeCapError(KfplaceError):
    """Problem size exceeds the configured brute-force cap."""


class GenerationError(KfplaceError):
    """Random instance generation exhausted its rejection budget."""


class InstanceFormatError(KfplaceError):
    """An instance document failed parsing or validation.

    ``field`` names the offending field when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

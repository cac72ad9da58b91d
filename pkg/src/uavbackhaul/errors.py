"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class NonConvergence(ArithmeticError):
    """A numerical routine missed its error target.

    The best available estimate and its error bound are kept so callers can
    decide whether a near miss is acceptable.
    """

    def __init__(self, message: str, estimate: float = float("nan"), error: float = float("inf")):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConfigError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NoBackhaulBS(RuntimeError):
    """A network drop contains no backhaul-enabled base station."""

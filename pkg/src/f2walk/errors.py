"""Exceptions shared across the package.

Split by how a front end should treat them: bad user input
(``ConfigError``), a resource cap hit by a well-formed request
(``CapExceededError``), and internal guard rails that indicate the
computation cannot continue faithfully (``InfraError`` subclasses).
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration or request parameters."""


class CapExceededError(ValueError):
    """A request exceeded an enumeration or size cap."""


class InfraError(RuntimeError):
    """The computation hit an internal guard and must abort."""


class LookaheadExceededError(InfraError):
    """A lazy digit comparison did not resolve within the lookahead bound."""


class CarryBoundError(InfraError):
    """An odometer carry/borrow ran past the carry bound."""


class BoundaryContactError(ValueError):
    """An exact cylinder operation touched the boundary stratum."""

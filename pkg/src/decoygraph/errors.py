"""Exception types shared across the package.

The CLI maps these onto exit codes: validation and configuration problems
exit 2, an underivable goal exits 3.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Input data violates a documented invariant."""


class ConfigurationError(ValueError):
    """Parameters cannot produce a well-formed artifact."""


class Unreachable(RuntimeError):
    """The goal cannot be derived from the available facts."""

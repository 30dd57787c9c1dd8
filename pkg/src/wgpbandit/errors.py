"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: input/configuration/ingestion problems
exit 1, numerical failures exit 2.
"""

from __future__ import annotations


class InputError(ValueError):
    """Invalid argument or malformed input (CLI exit code 1)."""


class ConfigurationError(InputError):
    """Invalid or inconsistent configuration."""


class IngestionError(InputError):
    """A data file failed validation; the message names the offending cell."""


class ProtocolError(RuntimeError):
    """Interaction-order violation (out-of-order feedback, repeated round)."""


class NumericalError(RuntimeError):
    """A factorization failed after jitter escalation (CLI exit code 2).

    Carries condition diagnostics in ``details`` when available.
    """

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = dict(details or {})

"""Structured errors shared across the package.

Every error carries a machine-readable payload so the CLI can emit a
one-line JSON diagnostic and exit with a stable code.
"""

from __future__ import annotations

from typing import Any


class TreegaugeError(Exception):
    """Base class; `payload` is JSON-serializable, `exit_code` is the CLI code."""

    exit_code = 3

    def __init__(self, message: str, **payload: Any) -> None:
        super().__init__(message)
        self.message = message
        self.payload = dict(payload)

    def to_json_dict(self) -> dict[str, Any]:
        d = {"error": type(self).__name__, "message": self.message}
        d.update(self.payload)
        return d


class UsageError(TreegaugeError):
    """Bad arguments or malformed input files."""

    exit_code = 1


class ResourceCapError(TreegaugeError):
    """A configured resource cap (vertex count, state count) was exceeded."""

    exit_code = 2


class StabilizationError(TreegaugeError):
    """An iterative construction failed to certify a fixed point."""

    exit_code = 2


class VerificationError(TreegaugeError):
    """An internal invariant or a requested verification failed."""

    exit_code = 3

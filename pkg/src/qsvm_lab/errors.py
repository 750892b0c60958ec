"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration and data problems exit
with 2, anything else (including bugs surfacing as unexpected exceptions)
exits with 1.
"""

from __future__ import annotations


class QsvmLabError(Exception):
    """Base class for every error raised deliberately by this package."""


class ConfigurationError(QsvmLabError):
    """A configuration value is out of range or inconsistent."""


class CircuitError(QsvmLabError):
    """A gate, tape, or state is used in a structurally invalid way."""


class UnsupportedGateError(CircuitError):
    """A parameterized gate outside the shift-rule family was differentiated."""


class DataError(QsvmLabError):
    """Sample or label arrays violate a contract (shape, domain, emptiness)."""


class IngestionError(DataError):
    """A dataset file could not be parsed; the message carries the location."""


class DegenerateDataError(DataError):
    """Training data collapses to a single class."""

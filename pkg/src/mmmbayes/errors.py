"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numerical failures with 3 and data inconsistencies with 4.
"""
from __future__ import annotations


class MmmBayesError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MmmBayesError):
    """Malformed configuration file, unknown keys, or schema violation."""


class NumericError(MmmBayesError):
    """A numerical operation failed (underflow, non-normalizable, ...)."""


class DegeneratePriorError(NumericError):
    """The Fisher information vanishes identically on the grid."""


class DataInconsistencyError(MmmBayesError):
    """Count data violate the fair-sampling bookkeeping constraints."""

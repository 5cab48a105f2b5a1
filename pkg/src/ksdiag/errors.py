"""Exception hierarchy.

``DegenerateInputError`` subclasses mark conditions under which the
diagnostic pipeline cannot produce a verdict for otherwise well-formed
inputs; the pipeline converts them into a DEGENERATE_STOPPED report
instead of propagating.
"""

from __future__ import annotations


class KsDiagError(Exception):
    """Base class for all package errors."""


class ConfigError(KsDiagError, ValueError):
    """Invalid governance configuration value."""


# --- CSV ingestion -----------------------------------------------------------

class LoadError(KsDiagError, ValueError):
    """Base class for CSV ingestion failures."""


class MissingColumnError(LoadError):
    pass


class UnknownColumnError(LoadError):
    pass


class NonFiniteScoreError(LoadError):
    pass


class NonFiniteCovariateError(LoadError):
    pass


class BadLabelError(LoadError):
    pass


class EmptySegmentError(LoadError):
    pass


class RaggedCovariatesError(LoadError):
    pass


class EmptyFileError(LoadError):
    pass


class SingleClassSampleError(LoadError):
    pass


# --- degenerate analysis conditions ------------------------------------------

class DegenerateInputError(KsDiagError):
    """Valid data, but the requested statistic is undefined on it."""


class EmptyClassError(DegenerateInputError):
    pass


class NonPositiveWeightError(KsDiagError, ValueError):
    pass


class EmptyClassAfterFilterError(DegenerateInputError):
    pass


class ZeroReferenceKsError(DegenerateInputError):
    pass


class EmptyVectorError(KsDiagError, ValueError):
    pass


class AllReplicatesDegenerateError(DegenerateInputError):
    pass


class EmptyCommonSupportError(DegenerateInputError):
    pass


class ZeroMixAdjustedKsError(DegenerateInputError):
    pass


class NoCovariatesError(DegenerateInputError):
    pass


class SingleClassError(DegenerateInputError):
    pass


class ZeroXAlignedKsError(DegenerateInputError):
    pass


# --- scenario generation and reports -----------------------------------------

class InvalidSpecError(KsDiagError, ValueError):
    pass


class SchemaError(KsDiagError, ValueError):
    """Report JSON does not match the expected schema version/shape."""

"""Exception types raised by the qbn package."""

from __future__ import annotations


class QbnError(Exception):
    """Base class for all package-specific errors."""


class NetworkFormatError(QbnError):
    """A network or model file line could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class StructureError(QbnError):
    """An operation was applied to nodes that do not satisfy its
    structural preconditions (missing edge, unknown node, ...)."""


class AcyclicityError(StructureError):
    """The requested structure or operation would introduce a cycle."""


class DatasetSchemaError(QbnError):
    """Dataset header or row does not match the network's variables."""


class MalformedSampleError(QbnError):
    """A sample does not assign exactly one known value per variable."""


class InvalidPriorError(QbnError):
    """A prior specification carries negative pseudo-counts."""


class UndefinedSummaryError(QbnError):
    """Summary statistics requested for a zero-mass beta statistic."""


class QueryParseError(QbnError):
    """A query string does not match the query grammar."""


class CapacityError(QbnError):
    """A requested dense joint table exceeds the supported size."""


class PlanExecutionError(QbnError):
    """A planned transformation failed its precondition at execution.

    Carries the trace of records applied before the failure.
    """

    def __init__(self, message: str, trace: tuple = ()):
        self.trace = trace
        super().__init__(message)

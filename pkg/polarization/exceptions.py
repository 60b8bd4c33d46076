"""
Error hierarchy for the polarization app.

Input and configuration problems derive from ConfigurationError (CLI exit
code 2); failures while measuring a graph derive from EstimationFailedError
(CLI exit code 3).
"""
from typing import Iterable, Optional


class ControversyError(Exception):
    """Base class for every error raised by the polarization app."""

    exit_code = 1


class ConfigurationError(ControversyError, ValueError):
    """Invalid parameters, configuration or input files."""

    exit_code = 2


class GraphParseError(ConfigurationError):
    """A line of an input file could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None, path=None):
        self.line_number = line_number
        self.path = path
        if line_number is not None:
            message = f'{path or "<input>"}:{line_number}: {message}'
        super().__init__(message)


class EmptyGraphError(ConfigurationError):
    """An edge list declared no nodes at all."""


class IncompletePartitionError(ConfigurationError):
    """Some graph nodes have no partition label."""

    def __init__(self, missing: Iterable[str]):
        self.missing = sorted(missing)
        preview = ', '.join(self.missing[:20])
        if len(self.missing) > 20:
            preview += f', ... ({len(self.missing) - 20} more)'
        super().__init__(f'Partition is missing {len(self.missing)} node(s): {preview}')


class DuplicateNodeError(ConfigurationError):
    """A node was declared twice where it must be unique."""


class EmptyPoolError(ConfigurationError):
    """A node-addition step received an empty candidate pool."""


class DegeneratePartitionError(ConfigurationError):
    """One side of the partition has no nodes."""


class ExactSolverLimitError(ConfigurationError):
    """The graph is too large for the dense absorbing-chain solver."""


class EstimationFailedError(ControversyError, RuntimeError):
    """RWC could not be estimated for the given graph."""

    exit_code = 3


class ExactSolverError(EstimationFailedError):
    """The absorbing-chain linear system could not be solved."""


class GraphInvariantError(ControversyError, AssertionError):
    """A graph failed its adjacency consistency scan."""

    exit_code = 3

"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union


class FairRankingError(Exception):
    """Base class for all errors raised by private_fair_ranking."""


class RingRangeError(FairRankingError, ValueError):
    """A real value does not fit the fixed-point window of the ring."""


class ParameterError(FairRankingError, ValueError):
    """An argument is outside the domain an operation accepts."""


class ConfigurationError(ParameterError):
    """Protocol or experiment parameters are inconsistent."""


class ProtocolError(FairRankingError):
    """Shares, parties or message shapes do not line up."""


class TransportError(ProtocolError):
    """A channel between the two servers failed or was closed."""


class SolverError(FairRankingError):
    """The reranking problem could not be solved.

    For quality factors in [0, 1] this is unreachable: the relevance order
    is always feasible.
    """


class IngestionError(FairRankingError):
    """A relevance file could not be read; names the offending cell."""

    def __init__(
        self,
        message: str,
        path: Union[str, Path, None] = None,
        row: Optional[int] = None,
        column: Optional[int] = None,
    ) -> None:
        self.path = Path(path) if path is not None else None
        self.row = row
        self.column = column
        location = []
        if self.path is not None:
            location.append(str(self.path))
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class ReportError(FairRankingError):
    """Writing or parsing a report file failed."""

    def __init__(self, message: str, path: Union[str, Path]) -> None:
        self.path = Path(path)
        super().__init__(f"{message}: {self.path}")

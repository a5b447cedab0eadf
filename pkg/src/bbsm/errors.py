"""Exception taxonomy shared across the package.

Every exception raised on purpose derives from :class:`BbsmError` so callers
(and the CLI) can map failures to a small set of outcomes: configuration
mistakes, bad or insufficient data, and model-validity violations discovered
mid-computation.
"""

from __future__ import annotations

__all__ = [
    "BbsmError",
    "ConfigError",
    "ParseError",
    "EmptyInput",
    "DuplicateYear",
    "EmptyIntersection",
    "LengthMismatch",
    "EmptyTable",
    "CalendarMismatch",
    "AllZeroWeights",
    "DivisionByZero",
    "TooShort",
    "ZeroVariance",
    "DegenerateProbability",
    "ProbabilityOutOfRange",
    "NegativeVolatility",
    "TooFewObservations",
    "RankDeficient",
    "Infeasible",
    "NonpositiveA0",
    "DegenerateDenominator",
    "NonpositiveVolatility",
    "NonpositiveBandwidth",
    "NegativeConditionalVolatility",
    "QOutOfRange",
    "MaturityTooLargeForEnumeration",
    "CalendarBeforeFirstFY",
    "MODEL_VALIDITY_ERRORS",
    "DATA_ERRORS",
]


class BbsmError(Exception):
    """Base class for all deliberate failures in this package."""


class ConfigError(BbsmError):
    """Invalid configuration or CLI usage (bad flags, budgets, malformed config)."""


# ---------------------------------------------------------------- ingestion

class ParseError(BbsmError):
    """A data file could not be parsed; the message names the file and row."""

    def __init__(self, message: str, *, row: int | None = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class EmptyInput(BbsmError):
    """A loader produced no rows."""


class DuplicateYear(BbsmError):
    """A fiscal-score table lists the same fiscal year twice."""


class EmptyIntersection(BbsmError):
    """Calendar alignment left no common dates."""


class LengthMismatch(BbsmError):
    """Two aligned series have different lengths."""


# ---------------------------------------------------------------- ESG

class EmptyTable(BbsmError):
    """A fiscal-score table has no entries."""


class CalendarMismatch(BbsmError):
    """Series that must share a calendar do not."""


class AllZeroWeights(BbsmError):
    """Index weights sum to zero, so they cannot be normalized."""


class DivisionByZero(BbsmError):
    """A market-level value used as a denominator is zero; names the date."""


# ---------------------------------------------------------------- path construction

class TooShort(BbsmError):
    """A series is too short for the requested construction."""


class ZeroVariance(BbsmError):
    """A change series is constant, so it cannot be standardized."""


class DegenerateProbability(BbsmError):
    """All standardized changes share one sign: the up-move frequency is 0 or 1."""


class ProbabilityOutOfRange(BbsmError):
    """A probability parameter fell outside (0, 1)."""


class NegativeVolatility(BbsmError):
    """The risky diffusion coefficient went negative during simulation."""


# ---------------------------------------------------------------- calibration

class TooFewObservations(BbsmError):
    """Fewer observations than the configured floor for a fit."""


class RankDeficient(BbsmError):
    """The regression design matrix is rank-deficient."""


class Infeasible(BbsmError):
    """The constrained solver found no feasible point; signals a solver bug."""


class NonpositiveA0(BbsmError):
    """Normalization by the initial asset value requires it to be positive."""


class DegenerateDenominator(BbsmError):
    """A goodness-of-fit denominator degenerated (too few points or zero spread)."""


class NonpositiveVolatility(BbsmError):
    """A volatility that must be positive is not."""


class NonpositiveBandwidth(BbsmError):
    """A kernel bandwidth must be positive."""


# ---------------------------------------------------------------- pricing

class NegativeConditionalVolatility(BbsmError):
    """The one-step conditional volatility went negative at a tree node."""


class QOutOfRange(BbsmError):
    """The risk-neutral up probability left (0, 1) at a tree node."""


class MaturityTooLargeForEnumeration(BbsmError):
    """Full tree enumeration is capped; the requested maturity exceeds the cap."""


# ---------------------------------------------------------------- warnings

class CalendarBeforeFirstFY(UserWarning):
    """Calendar dates precede the first fiscal-year mark; the first score is reused."""


# Model-validity failures (CLI exit code 3); everything else under BbsmError
# that is not a ConfigError maps to the data-error exit code 2.
MODEL_VALIDITY_ERRORS = (
    NegativeConditionalVolatility,
    QOutOfRange,
    NegativeVolatility,
    ProbabilityOutOfRange,
    DegenerateProbability,
)

DATA_ERRORS = (
    ParseError,
    EmptyInput,
    DuplicateYear,
    EmptyIntersection,
    LengthMismatch,
    EmptyTable,
    CalendarMismatch,
    AllZeroWeights,
    DivisionByZero,
    TooShort,
    ZeroVariance,
    TooFewObservations,
    RankDeficient,
    NonpositiveA0,
    DegenerateDenominator,
)

"""Loading, validation, and calendar alignment of the external data feeds.

Three feeds enter the pipeline: daily stock/index prices, fiscal-year ESG
scores, and annualized treasury yields. The canonical file format is CSV with
a header row, ISO-8601 dates, and decimal-point reals. Missing dates are
handled by inner join only (never filled), since the downstream regressions
pair same-day observations.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateYear,
    EmptyInput,
    EmptyIntersection,
    LengthMismatch,
    ParseError,
)

__all__ = [
    "TradingCalendar",
    "PriceSeries",
    "FiscalEsgTable",
    "RateSeries",
    "ManifestEntry",
    "load_price_series",
    "save_price_series",
    "load_esg_fiscal_scores",
    "save_esg_fiscal_scores",
    "load_treasury_rates",
    "save_treasury_rates",
    "align_calendars",
    "load_manifest",
    "slice_series",
]


@dataclass(frozen=True)
class TradingCalendar:
    """Ordered grid of trading dates; the daily time axis of every series."""

    dates: tuple[date, ...]

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur <= prev:
                raise ValueError(
                    f"calendar dates must be strictly increasing; {cur} follows {prev}"
                )

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, k: int) -> date:
        return self.dates[k]

    def __iter__(self):
        return iter(self.dates)

    def index_of(self, day: date) -> int:
        """Position of `day` in the calendar; raises KeyError if absent."""
        try:
            return self.dates.index(day)
        except ValueError:
            raise KeyError(f"{day} is not a trading date of this calendar") from None


def _as_value_array(values, n: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{what} must be one-dimensional")
    if arr.shape[0] != n:
        raise LengthMismatch(f"{what} has {arr.shape[0]} entries for {n} calendar dates")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """Dated asset values (stock, index, or riskless account) on one calendar."""

    calendar: TradingCalendar
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _as_value_array(self.values, len(self.calendar), "values")
        )

    def __len__(self) -> int:
        return len(self.calendar)


@dataclass(frozen=True)
class RateSeries:
    """Annualized riskless yields per date, stored as fractions per year.

    Negative yields are legitimate input; conversion to a daily rate is
    deferred to the riskless-account builder in `calibrate`.
    """

    calendar: TradingCalendar
    annualized_yield: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self,
            "annualized_yield",
            _as_value_array(self.annualized_yield, len(self.calendar), "annualized_yield"),
        )

    def __len__(self) -> int:
        return len(self.calendar)


@dataclass(frozen=True)
class FiscalEsgTable:
    """Per-fiscal-year ESG scores on a 0-10 scale, sorted by year."""

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        entries = tuple((int(y), float(s)) for y, s in self.entries)
        years = [y for y, _ in entries]
        for prev, cur in zip(years, years[1:]):
            if cur == prev:
                raise DuplicateYear(f"fiscal year {cur} appears more than once")
            if cur < prev:
                raise ValueError("fiscal years must be sorted increasing")
        for y, s in entries:
            if not math.isfinite(s) or s < 0:
                raise ValueError(f"ESG score for FY{y} must be finite and >= 0, got {s}")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def years(self) -> tuple[int, ...]:
        return tuple(y for y, _ in self.entries)

    @property
    def scores(self) -> tuple[float, ...]:
        return tuple(s for _, s in self.entries)


# --------------------------------------------------------------------------
# CSV plumbing
# --------------------------------------------------------------------------

def _read_rows(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [
            row
            for row in csv.reader(fh)
            if row
            and any(cell.strip() for cell in row)
            # '#' rows are provenance preambles written by the exporters
            and not row[0].lstrip().startswith("#")
        ]
    return rows


def _resolve_column(col: int | str, header: list[str] | None, path: Path) -> int:
    if isinstance(col, int):
        return col
    if header is None:
        raise ParseError(f"{path}: column {col!r} requested but file has no header row")
    cells = [c.strip().lower() for c in header]
    try:
        return cells.index(col.strip().lower())
    except ValueError:
        raise ParseError(f"{path}: no column named {col!r} in header {header}") from None


def _parse_date(cell: str, path: Path, row: int) -> date:
    try:
        return date.fromisoformat(cell.strip())
    except ValueError:
        raise ParseError(f"{path}: cannot parse date {cell!r}", row=row) from None


def _parse_real(cell: str, path: Path, row: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"{path}: cannot parse value {cell!r}", row=row) from None
    if not math.isfinite(value):
        raise ParseError(f"{path}: non-finite value {cell!r}", row=row)
    return value


def _looks_like_date(cell: str) -> bool:
    try:
        date.fromisoformat(cell.strip())
        return True
    except ValueError:
        return False


def _load_dated_values(
    path: str | Path, date_col: int | str, value_col: int | str
) -> tuple[TradingCalendar, np.ndarray]:
    """Shared loader for any (date, real) CSV; sorts by date, rejects duplicates."""
    path = Path(path)
    rows = _read_rows(path)
    if not rows:
        raise EmptyInput(f"{path}: no data rows")

    # The canonical format has a header; a file whose first date cell already
    # parses as ISO is accepted as headerless.
    header: list[str] | None = None
    first_data = 0
    probe = rows[0][date_col] if isinstance(date_col, int) and date_col < len(rows[0]) else rows[0][0]
    if not _looks_like_date(probe):
        header = rows[0]
        first_data = 1
    di = _resolve_column(date_col, header, path)
    vi = _resolve_column(value_col, header, path)

    records: list[tuple[date, float]] = []
    for offset, row in enumerate(rows[first_data:], start=first_data + 1):
        if max(di, vi) >= len(row):
            raise ParseError(f"{path}: expected at least {max(di, vi) + 1} columns", row=offset)
        d = _parse_date(row[di], path, offset)
        v = _parse_real(row[vi], path, offset)
        records.append((d, v))
    if not records:
        raise EmptyInput(f"{path}: header only, no data rows")

    records.sort(key=lambda rec: rec[0])
    for (d1, _), (d2, _) in zip(records, records[1:]):
        if d1 == d2:
            raise ParseError(f"{path}: duplicate date {d1}")
    calendar = TradingCalendar(tuple(d for d, _ in records))
    values = np.array([v for _, v in records], dtype=np.float64)
    return calendar, values


def _write_dated_values(
    path: str | Path, header: tuple[str, str], calendar, values, preamble=()
) -> None:
    with open(path, "w", newline="") as fh:
        for line in preamble:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for d, v in zip(calendar, values):
            # repr() is the shortest decimal that round-trips the float exactly
            writer.writerow([d.isoformat(), repr(float(v))])


# --------------------------------------------------------------------------
# Loaders
# --------------------------------------------------------------------------

def load_price_series(
    path: str | Path, date_col: int | str = 0, value_col: int | str = 1
) -> PriceSeries:
    """Load a (date, price) CSV into a PriceSeries sorted by date.

    Columns are selected by position (int) or by header name (str).
    Non-finite values and duplicate dates are rejected with the offending row.
    """
    calendar, values = _load_dated_values(path, date_col, value_col)
    return PriceSeries(calendar, values)


def save_price_series(series: PriceSeries, path: str | Path, preamble=()) -> None:
    """Write the canonical CSV; load_price_series reproduces values bit-exactly.
    Optional preamble strings become '#' comment lines the loaders skip."""
    _write_dated_values(path, ("date", "value"), series.calendar, series.values, preamble)


def load_treasury_rates(
    path: str | Path,
    date_col: int | str = 0,
    value_col: int | str = 1,
    percent: bool = False,
) -> RateSeries:
    """Load annualized treasury yields; `percent=True` divides by 100 on load."""
    calendar, values = _load_dated_values(path, date_col, value_col)
    if percent:
        values = values / 100.0
    return RateSeries(calendar, values)


def save_treasury_rates(series: RateSeries, path: str | Path) -> None:
    _write_dated_values(path, ("date", "yield"), series.calendar, series.annualized_yield)


def load_esg_fiscal_scores(path: str | Path) -> FiscalEsgTable:
    """Load (fiscal-year, score) rows into a FiscalEsgTable sorted by year."""
    path = Path(path)
    rows = _read_rows(path)
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    first_data = 0
    try:
        int(rows[0][0])
    except ValueError:
        first_data = 1  # header row

    entries: list[tuple[int, float]] = []
    for offset, row in enumerate(rows[first_data:], start=first_data + 1):
        if len(row) < 2:
            raise ParseError(f"{path}: expected (year, score) columns", row=offset)
        try:
            year = int(row[0])
        except ValueError:
            raise ParseError(f"{path}: cannot parse fiscal year {row[0]!r}", row=offset) from None
        score = _parse_real(row[1], path, offset)
        entries.append((year, score))
    if not entries:
        raise EmptyInput(f"{path}: header only, no data rows")
    entries.sort(key=lambda e: e[0])
    for (y1, _), (y2, _) in zip(entries, entries[1:]):
        if y1 == y2:
            raise DuplicateYear(f"{path}: fiscal year {y1} appears more than once")
    return FiscalEsgTable(tuple(entries))


def save_esg_fiscal_scores(table: FiscalEsgTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("year", "score"))
        for year, score in table.entries:
            writer.writerow([year, repr(float(score))])


# --------------------------------------------------------------------------
# Alignment
# --------------------------------------------------------------------------

def _series_payload(series):
    """(field name, array) of the single value field of a dated-series dataclass."""
    for field in dataclasses.fields(series):
        if field.name != "calendar":
            return field.name, getattr(series, field.name)
    raise TypeError(f"{type(series).__name__} is not a dated series")


def align_calendars(series: list) -> tuple[list, int]:
    """Inner-join any dated series (prices, rates, ESG) onto their common calendar.

    Returns (aligned series in input order, dropped-date count), where the
    count is the number of distinct dates that appear in some input but not
    in every input. Idempotent: aligning aligned series changes nothing.
    """
    if not series:
        raise ValueError("align_calendars requires at least one series")
    date_sets = [set(s.calendar.dates) for s in series]
    common = set.intersection(*date_sets)
    if not common:
        raise EmptyIntersection("no date is present in every input series")
    union = set.union(*date_sets)
    dropped = len(union) - len(common)

    calendar = TradingCalendar(tuple(sorted(common)))
    aligned = []
    for s in series:
        name, values = _series_payload(s)
        lookup = {d: i for i, d in enumerate(s.calendar.dates)}
        idx = np.array([lookup[d] for d in calendar.dates], dtype=np.intp)
        aligned.append(dataclasses.replace(s, calendar=calendar, **{name: values[idx]}))
    return aligned, dropped


def slice_series(series, start: date | None = None, end: date | None = None):
    """Restrict a dated series to start <= date <= end (either bound optional)."""
    keep = [
        i
        for i, d in enumerate(series.calendar.dates)
        if (start is None or d >= start) and (end is None or d <= end)
    ]
    if not keep:
        raise EmptyIntersection("no dates remain after window selection")
    name, values = _series_payload(series)
    calendar = TradingCalendar(tuple(series.calendar.dates[i] for i in keep))
    return dataclasses.replace(
        series, calendar=calendar, **{name: values[np.asarray(keep, dtype=np.intp)]}
    )


# --------------------------------------------------------------------------
# Batch manifest
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifestEntry:
    """File locations for one ticker; paths are resolved against the manifest."""

    prices: Path
    esg: Path | None = None


def load_manifest(path: str | Path) -> dict[str, ManifestEntry]:
    """Load a JSON manifest mapping ticker -> {"prices": file, "esg": file}."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict) or not raw:
        raise ParseError(f"{path}: manifest must be a non-empty JSON object")
    base = path.parent
    manifest: dict[str, ManifestEntry] = {}
    for ticker, entry in raw.items():
        if not isinstance(entry, dict) or "prices" not in entry:
            raise ParseError(f"{path}: entry for {ticker!r} must be an object with 'prices'")
        prices = base / entry["prices"]
        esg = base / entry["esg"] if entry.get("esg") else None
        manifest[str(ticker)] = ManifestEntry(prices=prices, esg=esg)
    return manifest

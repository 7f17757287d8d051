"""Stock-day panel: data model, CSV ingestion, cleaning rules, market-level flow aggregation.

A panel is a collection of one record per (ticker, trading date) carrying OHLC
prices, volume, per-investor-group net buys in KRW and market capitalization.
Cleaning applies the exclusion and fill rules used throughout the library:
minimum trading days per calendar year, a market-cap floor, and forward-filling
of coverage gaps. Aggregation collapses the panel into one 3-vector of
market-wide normalized flows per date (foreign, institutional, individual).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from datetime import date as Date
from typing import Callable, Iterable, Mapping

import numpy as np

from . import filters
from .errors import (
    DuplicateKey,
    EmptyAfterCleaning,
    MissingColumn,
    UnparseableRow,
)

GROUPS = ("foreign", "institutional", "individual")

# canonical CSV column name for each PanelRecord field
CANONICAL_SCHEMA = {
    "ticker": "ticker",
    "date": "date",
    "open": "open",
    "high": "high",
    "low": "low",
    "close": "close",
    "volume": "volume",
    "net_buy_foreign": "net_buy_foreign",
    "net_buy_institutional": "net_buy_inst",
    "net_buy_individual": "net_buy_indiv",
    "market_cap": "market_cap",
}


@dataclass(frozen=True)
class PanelRecord:
    """One stock-day observation. Net buys are signed KRW; market_cap is KRW."""

    ticker: str
    date: Date
    open: float
    high: float
    low: float
    close: float
    volume: int
    net_buy_foreign: float
    net_buy_institutional: float
    net_buy_individual: float
    market_cap: float
    # set on records inserted by forward-filling; metadata, not part of equality
    filled: bool = field(default=False, compare=False)

    def net_buy(self, group: str) -> float:
        return getattr(self, "net_buy_" + group)

    def violation(self) -> str | None:
        """Reason this record violates the panel invariants, or None if valid."""
        if not self.ticker:
            return "empty ticker"
        for name in ("open", "high", "low", "close"):
            if not getattr(self, name) > 0:
                return f"nonpositive {name}"
        if self.volume < 0:
            return "negative volume"
        if self.low > min(self.open, self.close):
            return "low above min(open, close)"
        if self.high < max(self.open, self.close):
            return "high below max(open, close)"
        if not self.market_cap > 0:
            return "nonpositive market_cap"
        return None


@dataclass(frozen=True)
class Panel:
    """Immutable panel with a sorted trading calendar and at most one record per key."""

    records: tuple[PanelRecord, ...]
    calendar: tuple[Date, ...]
    universe: frozenset[str]
    n_rejected: int = field(default=0, compare=False)

    @classmethod
    def from_records(cls, records: Iterable[PanelRecord], n_rejected: int = 0) -> "Panel":
        recs = sorted(records, key=lambda r: (r.ticker, r.date))
        seen = set()
        for r in recs:
            key = (r.ticker, r.date)
            if key in seen:
                raise DuplicateKey(*key)
            seen.add(key)
        calendar = tuple(sorted({r.date for r in recs}))
        universe = frozenset(r.ticker for r in recs)
        return cls(tuple(recs), calendar, universe, n_rejected)

    def by_ticker(self) -> dict[str, list[PanelRecord]]:
        """Records grouped by ticker, each list sorted by date."""
        out: dict[str, list[PanelRecord]] = {}
        for r in self.records:  # records are sorted by (ticker, date)
            out.setdefault(r.ticker, []).append(r)
        return out

    def record(self, ticker: str, date: Date) -> PanelRecord | None:
        lookup = getattr(self, "_lookup", None)
        if lookup is None:
            lookup = {(r.ticker, r.date): r for r in self.records}
            object.__setattr__(self, "_lookup", lookup)
        return lookup.get((ticker, date))


@dataclass(frozen=True)
class CleaningConfig:
    min_days_per_year: int = 20
    winsorize_sigma: float = 5.0
    min_market_cap: float = 50e9
    forward_fill: bool = True

    def validate(self) -> None:
        if self.min_days_per_year <= 0:
            raise ValueError("min_days_per_year must be positive")
        if self.winsorize_sigma <= 0:
            raise ValueError("winsorize_sigma must be positive")
        if self.min_market_cap <= 0:
            raise ValueError("min_market_cap must be positive")


@dataclass(frozen=True, eq=False)
class FlowMatrix:
    """Date-indexed T x 3 matrix of market-aggregated flows, one column per group."""

    dates: tuple[Date, ...]
    values: np.ndarray  # shape (T, 3), column order == GROUPS
    groups: tuple[str, ...] = GROUPS

    def __post_init__(self):
        if self.values.shape != (len(self.dates), len(self.groups)):
            raise ValueError("values shape does not match dates/groups")

    def column(self, group: str) -> np.ndarray:
        return self.values[:, self.groups.index(group)]


def _parse_record(row: Mapping[str, str], schema: Mapping[str, str], line: int) -> PanelRecord:
    def col(fieldname):
        return row[schema[fieldname]]

    try:
        return PanelRecord(
            ticker=col("ticker").strip(),
            date=Date.fromisoformat(col("date").strip()),
            open=float(col("open")),
            high=float(col("high")),
            low=float(col("low")),
            close=float(col("close")),
            volume=int(float(col("volume"))),
            net_buy_foreign=float(col("net_buy_foreign")),
            net_buy_institutional=float(col("net_buy_institutional")),
            net_buy_individual=float(col("net_buy_individual")),
            market_cap=float(col("market_cap")),
        )
    except (ValueError, TypeError) as exc:
        raise UnparseableRow(line, str(exc)) from exc


def ingest_csv(path, schema: Mapping[str, str] | None = None) -> Panel:
    """Read a stock-day panel from CSV.

    `schema` maps PanelRecord field names to CSV column names; defaults to the
    canonical columns (ticker, date, open, high, low, close, volume,
    net_buy_foreign, net_buy_inst, net_buy_indiv, market_cap). Dates are
    ISO-8601, encoding UTF-8, header row required. Rows that parse but violate
    record invariants are dropped and counted in Panel.n_rejected; rows that do
    not parse raise UnparseableRow; duplicate (ticker, date) pairs raise
    DuplicateKey.
    """
    schema = dict(CANONICAL_SCHEMA if schema is None else schema)
    missing = set(CANONICAL_SCHEMA) - set(schema)
    if missing:
        raise MissingColumn(sorted(missing)[0])

    records = []
    rejected = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in schema.values():
            if column not in header:
                raise MissingColumn(column)
        for line, row in enumerate(reader, start=2):
            rec = _parse_record(row, schema, line)
            if rec.violation() is not None:
                rejected += 1
                continue
            records.append(rec)
    return Panel.from_records(records, n_rejected=rejected)


def write_csv(panel: Panel, path) -> None:
    """Write a panel with the canonical column set; floats round-trip exactly."""
    fields = list(CANONICAL_SCHEMA)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([CANONICAL_SCHEMA[f] for f in fields])
        for r in panel.records:
            writer.writerow(
                [
                    r.ticker,
                    r.date.isoformat(),
                    repr(float(r.open)),
                    repr(float(r.high)),
                    repr(float(r.low)),
                    repr(float(r.close)),
                    int(r.volume),
                    repr(float(r.net_buy_foreign)),
                    repr(float(r.net_buy_institutional)),
                    repr(float(r.net_buy_individual)),
                    repr(float(r.market_cap)),
                ]
            )


def clean(panel: Panel, cfg: CleaningConfig | None = None) -> Panel:
    """Apply the panel exclusion and fill rules.

    (a) tickers with fewer than cfg.min_days_per_year observed records in any
        calendar year they appear are removed;
    (b) tickers whose median market cap over their observed lifetime is below
        cfg.min_market_cap are removed (median rather than point-in-time, so a
        single day's fluctuation cannot flip membership);
    (c) gaps in a surviving ticker's coverage, relative to the surviving
        panel's calendar and within the ticker's own first/last dates, are
        forward-filled: prices and market cap carried from the previous day,
        volume and all net buys set to zero.

    Exclusions are evaluated on observed (non-filled) records only, which makes
    clean idempotent. Winsorization of flows is not done here; it belongs to
    the normalization stage.
    """
    cfg = cfg or CleaningConfig()
    cfg.validate()
    if not panel.records:
        raise EmptyAfterCleaning("input panel has no records")

    survivors: dict[str, list[PanelRecord]] = {}
    for ticker, recs in panel.by_ticker().items():
        observed = [r for r in recs if not r.filled]
        years: dict[int, int] = {}
        for r in observed:
            years[r.date.year] = years.get(r.date.year, 0) + 1
        if any(n < cfg.min_days_per_year for n in years.values()):
            continue
        caps = sorted(r.market_cap for r in observed)
        median_cap = float(np.median(caps)) if caps else 0.0
        if median_cap < cfg.min_market_cap:
            continue
        survivors[ticker] = recs

    if not survivors:
        raise EmptyAfterCleaning("no tickers survive the cleaning rules")

    calendar = sorted({r.date for recs in survivors.values() for r in recs})
    out: list[PanelRecord] = []
    for ticker, recs in survivors.items():
        if not cfg.forward_fill:
            out.extend(recs)
            continue
        have = {r.date: r for r in recs}
        first, last = recs[0].date, recs[-1].date
        prev = None
        for d in calendar:
            if d < first or d > last:
                continue
            rec = have.get(d)
            if rec is None:
                rec = replace(
                    prev,
                    date=d,
                    volume=0,
                    net_buy_foreign=0.0,
                    net_buy_institutional=0.0,
                    net_buy_individual=0.0,
                    filled=True,
                )
            out.append(rec)
            prev = rec
    return Panel.from_records(out)


def aggregate_market_flows(
    panel: Panel,
    normalizer: str = "matched_filter",
    zscore_window: int = 60,
    winsorize_sigma: float | None = None,
) -> FlowMatrix:
    """Collapse a panel into one market-level flow 3-vector per date.

    Each (ticker, group) flow series is normalized per stock, then averaged
    with equal weights across all stocks present on each date. `normalizer` is
    one of "raw", "matched_filter" (net buy / market cap) or "zscore" (rolling
    z-score over `zscore_window` trailing days, entries with insufficient
    history dropped). If `winsorize_sigma` is given, each normalized
    (ticker, group) series is winsorized at that many sigmas before averaging;
    series too short or with zero dispersion pass through unchanged. Dates on
    which no group has a defined value for any stock are dropped, so the
    output has exactly one row per surviving date.
    """
    if normalizer not in ("raw", "matched_filter", "zscore"):
        raise ValueError(f"unknown normalizer: {normalizer!r}")

    sums: dict[Date, np.ndarray] = {}
    counts: dict[Date, np.ndarray] = {}

    def add(d: Date, gi: int, value: float) -> None:
        if d not in sums:
            sums[d] = np.zeros(3)
            counts[d] = np.zeros(3, dtype=int)
        sums[d][gi] += value
        counts[d][gi] += 1

    for ticker, recs in panel.by_ticker().items():
        dates = [r.date for r in recs]
        for gi, group in enumerate(GROUPS):
            raw = np.array([r.net_buy(group) for r in recs], dtype=float)
            if normalizer == "raw":
                values, idx = raw, np.arange(len(recs))
            elif normalizer == "matched_filter":
                caps = np.array([r.market_cap for r in recs], dtype=float)
                values = filters.matched_filter(raw, caps)
                idx = np.arange(len(recs))
            else:
                idx, values = filters.zscore_normalize(raw, zscore_window)
            if winsorize_sigma is not None and len(values) >= 2 and np.std(values, ddof=1) > 0:
                values = filters.winsorize(values, winsorize_sigma)
            for i, v in zip(idx, values):
                add(dates[i], gi, float(v))

    kept = [d for d in sorted(sums) if np.all(counts[d] > 0)]
    if not kept:
        raise EmptyAfterCleaning("no dates with defined flows for all groups")
    values = np.array([sums[d] / counts[d] for d in kept])
    return FlowMatrix(tuple(kept), values)


def write_flows_csv(flows: FlowMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", *flows.groups])
        for d, row in zip(flows.dates, flows.values):
            writer.writerow([d.isoformat(), *[repr(float(v)) for v in row]])


def read_flows_csv(path) -> FlowMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        groups = tuple(header[1:])
        dates, rows = [], []
        for row in reader:
            dates.append(Date.fromisoformat(row[0]))
            rows.append([float(v) for v in row[1:]])
    return FlowMatrix(tuple(dates), np.array(rows), groups)

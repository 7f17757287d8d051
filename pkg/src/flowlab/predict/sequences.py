"""Turn a cleaned panel into supervised sequence samples.

One sample per (ticker, date) that has a full lookback window of normalized
flows ending on that date and a next-day close-to-close return to predict.
Samples are ordered chronologically (then by ticker) so that a plain index
split is a pooled-chronological split with no look-ahead.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

import numpy as np

from .. import filters
from ..errors import EmptyDataset
from ..panel import GROUPS, Panel


@dataclass(frozen=True, eq=False)
class SequenceSample:
    """One supervised example: a K x 3 flow window and its next-day return."""

    inputs: np.ndarray
    target: float
    ticker: str
    date: Date  # date of the last input row


@dataclass(frozen=True, eq=False)
class SequenceDataset:
    inputs: np.ndarray  # (N, K, 3) normalized flows, oldest row first
    targets: np.ndarray  # (N,) next-day simple returns
    tickers: tuple[str, ...]
    dates: tuple[Date, ...]  # date of the last input row of each sample

    def __len__(self) -> int:
        return len(self.targets)

    def sample(self, i: int) -> SequenceSample:
        return SequenceSample(
            self.inputs[i], float(self.targets[i]), self.tickers[i], self.dates[i]
        )

    def subset(self, idx) -> "SequenceDataset":
        idx = np.asarray(idx, dtype=int)
        return SequenceDataset(
            self.inputs[idx],
            self.targets[idx],
            tuple(self.tickers[i] for i in idx),
            tuple(self.dates[i] for i in idx),
        )


def build_sequences(
    panel: Panel,
    normalizer: str = "matched_filter",
    lookback: int = 10,
    zscore_window: int = 60,
) -> SequenceDataset:
    """One sample per stock-day with `lookback` days of history and a next-day return.

    A ticker with exactly lookback + 1 records yields one sample; with fewer
    it yields none. Targets are close-to-close simple returns over the day
    after the window.
    """
    if normalizer not in ("raw", "matched_filter", "zscore"):
        raise ValueError(f"unknown normalizer: {normalizer!r}")

    inputs, targets, tickers, dates = [], [], [], []
    for ticker, recs in panel.by_ticker().items():
        t = len(recs)
        if t < lookback + 1:
            continue
        flows = np.full((t, 3), np.nan)
        for gi, group in enumerate(GROUPS):
            raw = np.array([r.net_buy(group) for r in recs], dtype=float)
            if normalizer == "raw":
                flows[:, gi] = raw
            elif normalizer == "matched_filter":
                caps = np.array([r.market_cap for r in recs], dtype=float)
                flows[:, gi] = filters.matched_filter(raw, caps)
            else:
                idx, vals = filters.zscore_normalize(raw, zscore_window)
                flows[idx, gi] = vals
        closes = np.array([r.close for r in recs], dtype=float)
        for end in range(lookback - 1, t - 1):
            window = flows[end - lookback + 1 : end + 1]
            if np.any(np.isnan(window)):
                continue
            inputs.append(window)
            targets.append(closes[end + 1] / closes[end] - 1.0)
            tickers.append(ticker)
            dates.append(recs[end].date)

    if not targets:
        raise EmptyDataset("no (ticker, date) has a full lookback window and next-day return")
    order = sorted(range(len(targets)), key=lambda i: (dates[i], tickers[i]))
    return SequenceDataset(
        np.array([inputs[i] for i in order]),
        np.array([targets[i] for i in order]),
        tuple(tickers[i] for i in order),
        tuple(dates[i] for i in order),
    )


def split_dataset(
    ds: SequenceDataset, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
) -> tuple[SequenceDataset, SequenceDataset, SequenceDataset]:
    """Chronological train/validation/test split on date boundaries."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    unique = sorted(set(ds.dates))
    n = len(unique)
    cut1 = unique[min(n - 1, int(n * fractions[0]))]
    cut2 = unique[min(n - 1, int(n * (fractions[0] + fractions[1])))]
    idx = np.arange(len(ds))
    d = np.array(ds.dates)
    train = idx[d < cut1]
    val = idx[(d >= cut1) & (d < cut2)]
    test = idx[d >= cut2]
    return ds.subset(train), ds.subset(val), ds.subset(test)

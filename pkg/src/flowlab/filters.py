"""Flow normalizations: matched-filter market-cap scaling, rolling z-score, winsorization.

The matched-filter measure divides net buying by market capitalization, giving
a dimensionless buying-pressure number comparable across the size spectrum
(the same 10 billion KRW purchase is 0.2 of a 50 billion KRW stock but only
0.0002 of a 50 trillion KRW one). The z-score variant is the conventional
rolling standardization baseline. All dispersion estimates here use the sample
standard deviation (ddof=1).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

import numpy as np

from .errors import DegenerateSeries, NonpositiveMarketCap, WindowTooShort


@dataclass(frozen=True)
class NormalizedFlow:
    """A single tagged normalized-flow observation (dimensionless KRW/KRW)."""

    value: float
    group: str
    ticker: str
    date: Date

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.value))


def matched_filter(net_buy, market_cap):
    """Net buy divided by market cap, elementwise. Scale-invariant by construction."""
    cap = np.asarray(market_cap, dtype=float)
    if np.any(cap <= 0):
        raise NonpositiveMarketCap("market_cap must be positive")
    out = np.asarray(net_buy, dtype=float) / cap
    if np.ndim(net_buy) == 0 and np.ndim(market_cap) == 0:
        return float(out)
    return out


def zscore_normalize(series, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Rolling z-score over the trailing `window` observations.

    The value at position t is standardized against the mean and sample sd of
    the `window` points strictly before t. Positions without a full window, or
    whose window has zero sd, are absent from the output. Returns
    (positions, values) as parallel arrays.
    """
    if window < 2:
        raise WindowTooShort(f"window must be >= 2, got {window}")
    x = np.asarray(series, dtype=float)
    idx, vals = [], []
    for t in range(window, len(x)):
        w = x[t - window : t]
        sd = np.std(w, ddof=1)
        if sd == 0:
            continue
        idx.append(t)
        vals.append((x[t] - np.mean(w)) / sd)
    return np.array(idx, dtype=int), np.array(vals, dtype=float)


def winsorize(series, sigma: float, moments: tuple[float, float] | None = None) -> np.ndarray:
    """Clamp values beyond mean +/- sigma * sd.

    By the fixed-moments convention the mean and sd are computed once from the
    pre-clamp series and never recomputed, so clamping again with the same
    moments is a no-op. `moments` overrides the (mean, sd) pair, which is how a
    caller re-applies the original bounds to an already-clamped series.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(series, dtype=float)
    if len(x) < 2:
        raise DegenerateSeries("series must have at least 2 observations")
    if moments is None:
        mean, sd = float(np.mean(x)), float(np.std(x, ddof=1))
    else:
        mean, sd = moments
    if sd == 0:
        raise DegenerateSeries("series has zero standard deviation")
    return np.clip(x, mean - sigma * sd, mean + sigma * sd)

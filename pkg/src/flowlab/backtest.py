"""Trading strategies, performance metrics and block-bootstrap confidence intervals.

Two strategies are implemented. Simple momentum ranks stocks each day by a
per-stock flow signal, goes long the top decile and short the bottom decile,
equal-weighted, each leg sized to one unit (dollar-neutral), holding over the
next trading day. The factor-timing strategy holds the equal-weight market
basket long or short according to the sign of a latent component on the prior
close. Costs are charged as cost_roundtrip times one-sided turnover (half the
sum of absolute weight changes), which for a 10bp round trip equals 5bp on
each dollar traded. All annualization uses 252 trading days and sample
standard deviations (ddof=1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date
from typing import Callable, Mapping

import numpy as np

from .errors import SeriesTooShort, TooFewStocks, ZeroVolatility
from .panel import GROUPS, FlowMatrix, Panel
from . import filters

TRADING_DAYS = 252


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = "simple_momentum"  # or "ica_factor"
    decile: float = 0.1
    cost_roundtrip: float = 0.001  # 10 basis points, as a fraction
    signal_lag: int = 1
    min_stocks: int = 10  # smallest cross-section allowed to trade

    def validate(self) -> None:
        if not 0 < self.decile <= 0.5:
            raise ValueError("decile must be in (0, 0.5]")
        if self.cost_roundtrip < 0:
            raise ValueError("cost must be >= 0")
        if self.signal_lag != 1:
            raise ValueError("only a one-day signal lag is supported")


@dataclass(frozen=True, eq=False)
class BacktestReport:
    dates: tuple[Date, ...]
    daily_returns: np.ndarray  # net of costs
    daily_gross: np.ndarray
    turnover_series: np.ndarray  # one-sided per day
    cumulative_return: float
    sharpe_net: float
    max_drawdown: float
    calmar: float
    hit_rate: float
    turnover: float  # mean daily one-sided turnover
    skipped_dates: tuple[Date, ...]

    def to_dict(self) -> dict:
        return {
            "cumulative_return": self.cumulative_return,
            "sharpe_net": self.sharpe_net,
            "max_drawdown": self.max_drawdown,
            "calmar": self.calmar,
            "hit_rate": self.hit_rate,
            "turnover": self.turnover,
            "n_days": len(self.dates),
            "skipped_dates": [d.isoformat() for d in self.skipped_dates],
        }


@dataclass(frozen=True)
class BootstrapCI:
    statistic: str
    point: float
    lower: float
    upper: float
    block_length: int
    replications: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "block_length": self.block_length,
            "replications": self.replications,
        }


def flow_signal(panel: Panel, normalizer: str = "matched_filter") -> dict:
    """Per-stock daily signal: the mean across groups of the normalized flow."""
    out = {}
    for r in panel.records:
        buys = np.array([r.net_buy(g) for g in GROUPS])
        if normalizer == "matched_filter":
            vals = filters.matched_filter(buys, r.market_cap)
        elif normalizer == "raw":
            vals = buys
        else:
            raise ValueError(f"unsupported signal normalizer: {normalizer!r}")
        out[(r.ticker, r.date)] = float(np.mean(vals))
    return out


def _close_lookup(panel: Panel) -> dict:
    return {(r.ticker, r.date): r.close for r in panel.records}


def _report(dates, gross, turnover_series, skipped, cost) -> BacktestReport:
    """Assemble a report; sharpe and calmar degrade to NaN when undefined."""
    gross = np.asarray(gross, dtype=float)
    turnover_series = np.asarray(turnover_series, dtype=float)
    net = gross - cost * turnover_series
    equity = np.cumprod(1.0 + net)
    peak = np.maximum(np.maximum.accumulate(equity), 1.0)  # curve starts at 1
    mdd = float(min((equity / peak - 1.0).min(), 0.0))
    cumulative = float(equity[-1] - 1.0)
    annualized = (1.0 + cumulative) ** (TRADING_DAYS / len(net)) - 1.0
    sd = net.std(ddof=1) if len(net) > 1 else 0.0
    sharpe = float(net.mean() / sd * np.sqrt(TRADING_DAYS)) if sd > 0 else math.nan
    if mdd < 0:
        calmar = float(annualized / abs(mdd))
    else:
        calmar = math.inf if annualized > 0 else 0.0
    return BacktestReport(
        dates=tuple(dates),
        daily_returns=net,
        daily_gross=gross,
        turnover_series=turnover_series,
        cumulative_return=cumulative,
        sharpe_net=sharpe,
        max_drawdown=mdd,
        calmar=calmar,
        hit_rate=float(np.mean(net > 0)),
        turnover=float(turnover_series.mean()),
        skipped_dates=tuple(skipped),
    )


def run_momentum(panel: Panel, flows: Mapping, cfg: StrategyConfig | None = None) -> BacktestReport:
    """Daily decile long-short on a per-stock signal, net of turnover costs.

    `flows` maps (ticker, date) to the signal known at that day's close;
    positions are held over the next trading day. Legs hold the top and bottom
    floor(n * decile) names, equal-weighted, +1 long and -1 short in total.
    Ranking ties break by ticker. Dates with a cross-section smaller than
    cfg.min_stocks (or an empty leg) are skipped with no position held, and
    logged. Raises TooFewStocks if no date trades at all.
    """
    cfg = cfg or StrategyConfig()
    cfg.validate()
    closes = _close_lookup(panel)
    calendar = panel.calendar

    dates, gross_seq, turn_seq, skipped = [], [], [], []
    prev_weights: dict[str, float] = {}
    for k in range(len(calendar) - 1):
        d, d_next = calendar[k], calendar[k + 1]
        cross = [
            t
            for t in panel.universe
            if (t, d) in flows and (t, d) in closes and (t, d_next) in closes
        ]
        n = len(cross)
        n_leg = int(n * cfg.decile)
        if n < cfg.min_stocks or n_leg < 1:
            skipped.append(d_next)
            prev_weights = {}
            continue
        ranked = sorted(cross, key=lambda t: (-flows[(t, d)], t))
        weights = {t: 1.0 / n_leg for t in ranked[:n_leg]}
        for t in ranked[-n_leg:]:
            weights[t] = -1.0 / n_leg

        ret = sum(w * (closes[(t, d_next)] / closes[(t, d)] - 1.0) for t, w in weights.items())
        traded = set(weights) | set(prev_weights)
        turnover = 0.5 * sum(
            abs(weights.get(t, 0.0) - prev_weights.get(t, 0.0)) for t in traded
        )
        dates.append(d_next)
        gross_seq.append(ret)
        turn_seq.append(turnover)
        prev_weights = weights

    if not dates:
        raise TooFewStocks("no date had a large enough cross-section to trade")
    return _report(dates, gross_seq, turn_seq, skipped, cfg.cost_roundtrip)


def run_ica_factor(
    flows: FlowMatrix,
    panel: Panel,
    component_series,
    cfg: StrategyConfig | None = None,
    component: int = 0,
) -> BacktestReport:
    """Market timing on the sign of a latent component.

    `component_series` is an IcaResult (its `component`-th column is used) or a
    plain array aligned to the flow matrix dates. The position over day t+1 is
    sign(component at close of t) applied to the equal-weight market basket,
    which is traded as a single asset for turnover purposes. Days without a
    component value stay flat and are logged as skipped.
    """
    cfg = cfg or StrategyConfig(kind="ica_factor")
    cfg.validate()
    values = getattr(component_series, "components", component_series)
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[:, component]
    ic = dict(zip(flows.dates, values))

    closes = _close_lookup(panel)
    calendar = panel.calendar
    dates, gross_seq, turn_seq, skipped = [], [], [], []
    prev_pos = 0.0
    for k in range(len(calendar) - 1):
        d, d_next = calendar[k], calendar[k + 1]
        stocks = [t for t in panel.universe if (t, d) in closes and (t, d_next) in closes]
        if d not in ic or not stocks:
            skipped.append(d_next)
            prev_pos = 0.0
            continue
        pos = float(np.sign(ic[d]))
        mkt = float(
            np.mean([closes[(t, d_next)] / closes[(t, d)] - 1.0 for t in stocks])
        )
        dates.append(d_next)
        gross_seq.append(pos * mkt)
        turn_seq.append(0.5 * abs(pos - prev_pos))
        prev_pos = pos

    if not dates:
        raise TooFewStocks("no date could be traded")
    return _report(dates, gross_seq, turn_seq, skipped, cfg.cost_roundtrip)


def metrics(daily_returns) -> dict:
    """Standard performance metrics of a daily return series.

    sharpe = mean/sd * sqrt(252) (sd with ddof=1; zero sd raises
    ZeroVolatility); cumulative return compounds the series; max drawdown is
    the worst peak-to-trough decline of the compounded equity curve, which
    starts at 1 before the first return, so a first-day loss already counts
    (in [-1, 0]); calmar divides the annualized return by |max drawdown|
    (infinite when the curve never draws down and the return is positive);
    hit rate is the fraction of strictly positive days.
    """
    r = np.asarray(daily_returns, dtype=float)
    if len(r) < 2:
        raise ValueError("need at least 2 observations")
    if np.all(r == r[0]):
        raise ZeroVolatility("return series is constant")
    sd = r.std(ddof=1)
    if sd == 0:
        raise ZeroVolatility("return series has zero standard deviation")
    equity = np.cumprod(1.0 + r)
    peak = np.maximum(np.maximum.accumulate(equity), 1.0)  # curve starts at 1
    drawdown = equity / peak - 1.0
    mdd = float(min(drawdown.min(), 0.0))
    cumulative = float(equity[-1] - 1.0)
    annualized = float((1.0 + cumulative) ** (TRADING_DAYS / len(r)) - 1.0)
    if mdd < 0:
        calmar = annualized / abs(mdd)
    else:
        calmar = math.inf if annualized > 0 else 0.0
    return {
        "sharpe": float(r.mean() / sd * np.sqrt(TRADING_DAYS)),
        "cumulative_return": cumulative,
        "annualized_return": annualized,
        "max_drawdown": mdd,
        "calmar": float(calmar),
        "hit_rate": float(np.mean(r > 0)),
        "n_days": int(len(r)),
    }


def block_bootstrap_ci(
    values,
    statistic: Callable[[np.ndarray], float],
    name: str | None = None,
    block_length: int = 21,
    replications: int = 1000,
    seed: int = 0,
) -> BootstrapCI:
    """95% circular block bootstrap confidence interval for a statistic.

    Resamples ceil(T / L) contiguous blocks of length L with wraparound,
    truncated to T observations, and takes the 2.5 and 97.5 percentiles of the
    statistic over replications. `values` may be 1-D or (T, k) when the
    statistic needs paired columns (rows are resampled together). Deterministic
    for a given seed.
    """
    x = np.asarray(values, dtype=float)
    t = x.shape[0]
    if t < 2 * block_length:
        raise SeriesTooShort(f"need at least {2 * block_length} observations, got {t}")
    rng = np.random.default_rng(seed)
    n_blocks = math.ceil(t / block_length)
    offsets = np.arange(block_length)
    stats = np.empty(replications)
    for rep in range(replications):
        starts = rng.integers(0, t, size=n_blocks)
        idx = ((starts[:, None] + offsets) % t).ravel()[:t]
        stats[rep] = statistic(x[idx])
    lower, upper = np.percentile(stats, [2.5, 97.5])
    label = name or getattr(statistic, "__name__", "statistic")
    return BootstrapCI(
        label, float(statistic(x)), float(lower), float(upper), block_length, replications, seed
    )

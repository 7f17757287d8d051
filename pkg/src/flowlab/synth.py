"""Synthetic stock-day panels with planted latent flow structure.

Three independent non-Gaussian sources are mixed through a known 3x3 matrix
into market-level group flows, the flows are spread across stocks in
proportion to market cap (times an idiosyncratic lognormal multiplier, which
makes raw flows size-confounded on purpose), and next-day returns optionally
load on the stock's own normalized flow. Everything downstream of the
generator can then be verified against known ground truth: the mixing matrix,
the source series and the strength of return predictability are all planted.

Randomness comes from numpy's default_rng (PCG64); a given seed reproduces the
panel bit for bit on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date, timedelta

import numpy as np

from .errors import SingularMixing
from .panel import Panel, PanelRecord

SOURCE_KINDS = ("laplacian", "uniform", "sinusoid", "gaussian")


def default_mixing() -> np.ndarray:
    """A fixed, well-conditioned mixing matrix used when none is configured."""
    return np.array(
        [
            [0.9, 0.35, 0.20],
            [0.25, 0.80, 0.45],
            [0.35, 0.20, 0.70],
        ]
    )


def random_mixing(rng: np.random.Generator, max_condition: float = 25.0) -> np.ndarray:
    """Random invertible 3x3 mixing with entries in [-1, 1] and bounded condition number."""
    while True:
        a = rng.uniform(-1.0, 1.0, size=(3, 3))
        if np.linalg.cond(a) <= max_condition:
            return a


@dataclass(frozen=True, eq=False)
class SynthConfig:
    n_stocks: int = 20
    n_days: int = 500
    mixing_matrix: np.ndarray = field(default_factory=default_mixing)
    source_kind: tuple[str, str, str] = ("laplacian", "laplacian", "laplacian")
    flow_to_return_coeff: float = 0.0
    return_noise_sigma: float = 0.0349
    return_mean: float = 0.00028
    seed: int = 0
    # lognormal sigma of the per-(stock, day, group) disaggregation multiplier
    flow_dispersion: float = 0.3

    def validate(self) -> None:
        if self.n_stocks < 1:
            raise ValueError("n_stocks must be >= 1")
        if self.n_days < 2:
            raise ValueError("n_days must be >= 2")
        if self.return_noise_sigma <= 0:
            raise ValueError("return_noise_sigma must be positive")
        for kind in self.source_kind:
            if kind not in SOURCE_KINDS:
                raise ValueError(f"unknown source kind: {kind!r}")
        a = np.asarray(self.mixing_matrix, dtype=float)
        if a.shape != (3, 3):
            raise ValueError("mixing_matrix must be 3x3")
        if not np.all(np.isfinite(a)) or np.linalg.cond(a) > 1e12:
            raise SingularMixing("mixing_matrix is singular or ill-conditioned")


@dataclass(frozen=True, eq=False)
class SynthPanel:
    panel: Panel
    true_sources: np.ndarray  # (T, 3), unit variance per column
    true_mixing: np.ndarray  # (3, 3)
    market_flows: np.ndarray  # (T, 3), X_t = mixing @ sources_t


def trading_calendar(n_days: int, start: Date = Date(2020, 1, 2)) -> list[Date]:
    """Consecutive weekdays starting at `start`."""
    out, d = [], start
    while len(out) < n_days:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def _draw_sources(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    t = cfg.n_days
    cols = []
    for j, kind in enumerate(cfg.source_kind):
        if kind == "laplacian":
            cols.append(rng.laplace(0.0, 1.0 / np.sqrt(2.0), size=t))
        elif kind == "uniform":
            cols.append(rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=t))
        elif kind == "gaussian":
            cols.append(rng.standard_normal(t))
        else:  # sinusoid, unit variance over whole periods
            period = 16.0 * (j + 1)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            cols.append(np.sqrt(2.0) * np.sin(2.0 * np.pi * np.arange(t) / period + phase))
    return np.column_stack(cols)


def generate(cfg: SynthConfig) -> SynthPanel:
    """Generate a panel with planted mixing, flow disaggregation and return signal.

    Per stock i, group g and day t the normalized-flow signal is
    X[t, g] * m[i, t, g] with X = sources @ mixing.T and m a lognormal
    multiplier of mean 1; net buys are that signal times the day's market cap,
    so matched-filter normalization recovers the signal exactly. Next-day
    returns are flow_to_return_coeff times the stock's mean normalized flow
    plus Gaussian noise plus the configured mean.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    a = np.asarray(cfg.mixing_matrix, dtype=float)
    t, n = cfg.n_days, cfg.n_stocks

    sources = _draw_sources(cfg, rng)
    market_flows = sources @ a.T

    tickers = [f"S{i:04d}" for i in range(n)]
    cap0 = 10.0 ** rng.uniform(11.0, 14.0, size=n)
    price0 = np.round(10.0 ** rng.uniform(3.5, 5.5, size=n), 0)

    sigma = cfg.flow_dispersion
    mult = np.exp(rng.normal(-0.5 * sigma * sigma, sigma, size=(t, 3, n)))
    stock_flows = market_flows[:, :, None] * mult  # (T, 3, N), normalized units

    noise = rng.normal(0.0, cfg.return_noise_sigma, size=(t, n))
    signal = stock_flows.mean(axis=1)  # (T, N) mean normalized flow per stock-day
    returns = np.empty((t, n))
    returns[0] = 0.0
    returns[1:] = cfg.return_mean + noise[1:] + cfg.flow_to_return_coeff * signal[:-1]
    returns = np.maximum(returns, -0.95)

    close = price0[None, :] * np.cumprod(1.0 + returns, axis=0)
    caps = cap0[None, :] * close / close[0]
    net_buys = stock_flows * caps[:, None, :]  # (T, 3, N), KRW

    hi_frac = np.abs(rng.normal(0.0, 0.005, size=(t, n)))
    lo_frac = np.abs(rng.normal(0.0, 0.005, size=(t, n)))
    volume = rng.integers(10_000, 1_000_000, size=(t, n))
    dates = trading_calendar(t)

    records = []
    for i in range(n):
        for k in range(t):
            c = close[k, i]
            o = close[k - 1, i] if k > 0 else c
            records.append(
                PanelRecord(
                    ticker=tickers[i],
                    date=dates[k],
                    open=o,
                    high=max(o, c) * (1.0 + hi_frac[k, i]),
                    low=min(o, c) * (1.0 - lo_frac[k, i]),
                    close=c,
                    volume=int(volume[k, i]),
                    net_buy_foreign=net_buys[k, 0, i],
                    net_buy_institutional=net_buys[k, 1, i],
                    net_buy_individual=net_buys[k, 2, i],
                    market_cap=caps[k, i],
                )
            )
    return SynthPanel(Panel.from_records(records), sources, a.copy(), market_flows)


def write_truth_csv(sp: SynthPanel, path) -> None:
    """Planted source series as CSV: date, s1, s2, s3."""
    import csv

    dates = sp.panel.calendar
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "s1", "s2", "s3"])
        for d, row in zip(dates, sp.true_sources):
            writer.writerow([d.isoformat(), *[repr(float(v)) for v in row]])

"""Shared fixture helpers for building small hand panels."""

from datetime import date, timedelta

from flowlab.panel import Panel, PanelRecord


def make_record(
    ticker="AAA",
    d=date(2021, 1, 4),
    close=10_000.0,
    net_foreign=1e9,
    net_inst=-5e8,
    net_indiv=-5e8,
    market_cap=100e9,
    volume=50_000,
    open_=None,
    high=None,
    low=None,
):
    o = close if open_ is None else open_
    return PanelRecord(
        ticker=ticker,
        date=d,
        open=o,
        high=max(o, close) * 1.01 if high is None else high,
        low=min(o, close) * 0.99 if low is None else low,
        close=close,
        volume=volume,
        net_buy_foreign=net_foreign,
        net_buy_institutional=net_inst,
        net_buy_individual=net_indiv,
        market_cap=market_cap,
    )


def weekdays(start: date, n: int) -> list[date]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def make_panel(spec: dict) -> Panel:
    """spec maps ticker -> list of (date, close, market_cap, net_buys 3-tuple)."""
    records = []
    for ticker, rows in spec.items():
        for d, close, cap, buys in rows:
            records.append(
                make_record(
                    ticker=ticker,
                    d=d,
                    close=close,
                    market_cap=cap,
                    net_foreign=buys[0],
                    net_inst=buys[1],
                    net_indiv=buys[2],
                )
            )
    return Panel.from_records(records)

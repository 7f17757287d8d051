"""Panel ingestion, cleaning rules and market-flow aggregation."""

import csv
from datetime import date

import numpy as np
import pytest

from flowlab.errors import DuplicateKey, EmptyAfterCleaning, MissingColumn, UnparseableRow
from flowlab.panel import (
    CANONICAL_SCHEMA,
    CleaningConfig,
    Panel,
    aggregate_market_flows,
    clean,
    ingest_csv,
    read_flows_csv,
    write_csv,
    write_flows_csv,
)

from conftest import make_panel, make_record, weekdays

HEADER = ",".join(CANONICAL_SCHEMA[f] for f in CANONICAL_SCHEMA)


def row(ticker, d, close=10000.0, cap=100e9, volume=1000):
    o, h, lo = close, close * 1.01, close * 0.99
    return f"{ticker},{d},{o},{h},{lo},{close},{volume},1000000,-500000,-500000,{cap}"


def write_lines(tmp_path, lines, name="panel.csv"):
    path = tmp_path / name
    path.write_text("\n".join([HEADER, *lines]) + "\n", encoding="utf-8")
    return path


class TestIngest:
    def test_three_row_identity(self, tmp_path):
        path = write_lines(
            tmp_path,
            [row("AAA", "2021-01-04"), row("AAA", "2021-01-05"), row("AAA", "2021-01-06")],
        )
        panel = ingest_csv(path)
        assert len(panel.records) == 3
        assert panel.universe == {"AAA"}
        assert len(panel.calendar) == 3
        assert panel.n_rejected == 0

    def test_invariant_violation_rejected_and_counted(self, tmp_path):
        path = write_lines(
            tmp_path, [row("AAA", "2021-01-04"), row("AAA", "2021-01-05", cap=0.0)]
        )
        panel = ingest_csv(path)
        assert len(panel.records) == 1
        assert panel.n_rejected == 1

    def test_duplicate_key_is_error(self, tmp_path):
        path = write_lines(tmp_path, [row("AAA", "2021-01-04"), row("AAA", "2021-01-04")])
        with pytest.raises(DuplicateKey):
            ingest_csv(path)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("ticker,date\nAAA,2021-01-04\n", encoding="utf-8")
        with pytest.raises(MissingColumn):
            ingest_csv(path)

    def test_unparseable_row(self, tmp_path):
        path = write_lines(tmp_path, [row("AAA", "2021-01-04").replace("10000.0", "ten", 1)])
        with pytest.raises(UnparseableRow) as err:
            ingest_csv(path)
        assert err.value.line == 2

    def test_bad_ohlc_rejected(self, tmp_path):
        bad = row("AAA", "2021-01-05").split(",")
        bad[4] = "10500.0"  # low above close
        path = write_lines(tmp_path, [row("AAA", "2021-01-04"), ",".join(bad)])
        assert ingest_csv(path).n_rejected == 1

    def test_round_trip(self, tmp_path):
        path = write_lines(
            tmp_path,
            [row("AAA", "2021-01-04", close=10123.45), row("BBB", "2021-01-04", cap=77e9)],
        )
        panel = ingest_csv(path)
        out = tmp_path / "out.csv"
        write_csv(panel, out)
        again = ingest_csv(out)
        assert again == panel


class TestClean:
    def test_too_few_days_in_one_year_removed(self):
        days_2020 = weekdays(date(2020, 3, 2), 19)
        days_2021 = weekdays(date(2021, 1, 4), 250)
        spec = {
            "FEW": [(d, 10000.0, 100e9, (1e9, 0, -1e9)) for d in days_2020 + days_2021],
            "OK": [(d, 20000.0, 200e9, (1e9, 0, -1e9)) for d in days_2021],
        }
        panel = make_panel(spec)
        cleaned = clean(panel, CleaningConfig())
        assert cleaned.universe == {"OK"}

    def test_median_market_cap_floor(self):
        days = weekdays(date(2021, 1, 4), 30)
        spec = {
            "SMALL": [(d, 10000.0, 40e9, (1e8, 0, -1e8)) for d in days],
            "BIG": [(d, 10000.0, 60e9, (1e8, 0, -1e8)) for d in days],
        }
        cleaned = clean(make_panel(spec), CleaningConfig(min_days_per_year=10))
        assert cleaned.universe == {"BIG"}

    def test_fixed_point(self):
        days = weekdays(date(2021, 1, 4), 25)
        spec = {"AAA": [(d, 10000.0, 100e9, (1e9, -1e9, 0)) for d in days]}
        panel = make_panel(spec)
        cleaned = clean(panel, CleaningConfig(min_days_per_year=20))
        assert cleaned.records == panel.records

    def test_forward_fill_gap(self):
        days = weekdays(date(2021, 1, 4), 5)
        # AAA misses the middle day; BBB holds the calendar
        spec = {
            "AAA": [
                (d, 10000.0 + i, 100e9 + i, (1e9, -2e8, -8e8))
                for i, d in enumerate(days)
                if i != 2
            ],
            "BBB": [(d, 5000.0, 80e9, (0.0, 1e8, -1e8)) for d in days],
        }
        cleaned = clean(make_panel(spec), CleaningConfig(min_days_per_year=4))
        filled = cleaned.record("AAA", days[2])
        prev = cleaned.record("AAA", days[1])
        assert filled is not None and filled.filled
        assert filled.close == prev.close
        assert filled.market_cap == prev.market_cap
        assert filled.volume == 0
        assert filled.net_buy_foreign == 0.0
        assert filled.net_buy_institutional == 0.0
        assert filled.net_buy_individual == 0.0
        # no fill outside the ticker's own first/last range
        assert len([r for r in cleaned.records if r.ticker == "AAA"]) == 5

    def test_idempotent(self):
        days = weekdays(date(2021, 1, 4), 40)
        rng = np.random.default_rng(7)
        spec = {}
        for k, ticker in enumerate(["AAA", "BBB", "CCC"]):
            keep = sorted(rng.choice(40, size=34, replace=False))
            spec[ticker] = [
                (days[i], 9000.0 + 10 * i + k, (60 + 10 * k) * 1e9, (1e9, -5e8, -5e8))
                for i in keep
            ]
        panel = make_panel(spec)
        once = clean(panel, CleaningConfig(min_days_per_year=10))
        twice = clean(once, CleaningConfig(min_days_per_year=10))
        assert twice == once

    def test_empty_after_cleaning(self):
        days = weekdays(date(2021, 1, 4), 5)
        spec = {"AAA": [(d, 10000.0, 100e9, (0.0, 0.0, 0.0)) for d in days]}
        with pytest.raises(EmptyAfterCleaning):
            clean(make_panel(spec), CleaningConfig(min_days_per_year=20))


class TestAggregate:
    def test_single_stock_equals_own_series(self):
        days = weekdays(date(2021, 1, 4), 4)
        spec = {
            "AAA": [(d, 10000.0, 100e9, (1e9 * (i + 1), -5e8, 2e8)) for i, d in enumerate(days)]
        }
        panel = make_panel(spec)
        flows = aggregate_market_flows(panel, "matched_filter")
        expected = np.array(
            [[1e9 * (i + 1) / 100e9, -5e8 / 100e9, 2e8 / 100e9] for i in range(4)]
        )
        assert np.allclose(flows.values, expected, atol=0, rtol=0)

    def test_opposite_flows_cancel(self):
        d = weekdays(date(2021, 1, 4), 1)[0]
        spec = {
            "AAA": [(d, 10000.0, 100e9, (2e9, 0.0, 0.0))],
            "BBB": [(d, 10000.0, 50e9, (-1e9, 0.0, 0.0))],
        }
        flows = aggregate_market_flows(make_panel(spec), "matched_filter")
        assert flows.values[0, 0] == 0.0

    def test_hand_computed_averages(self):
        # 3 stocks, 4 dates; oracle: explicit per-date arithmetic on paper values
        days = weekdays(date(2021, 1, 4), 4)
        caps = {"AAA": 100e9, "BBB": 50e9, "CCC": 200e9}
        buys = {
            "AAA": [(1e9, -2e8, 3e8), (2e9, 1e8, 0.0), (-1e9, 0.0, 5e8), (0.0, 0.0, 0.0)],
            "BBB": [(5e8, -5e8, 1e8), (0.0, 2e8, -2e8), (1e9, 1e9, -1e9), (2e8, 0.0, 0.0)],
            "CCC": [(-2e9, 4e8, 0.0), (1e9, -1e9, 2e8), (0.0, 6e8, -6e8), (4e8, 4e8, 0.0)],
        }
        spec = {
            t: [(d, 10000.0, caps[t], buys[t][i]) for i, d in enumerate(days)]
            for t in caps
        }
        flows = aggregate_market_flows(make_panel(spec), "matched_filter")
        for i in range(4):
            for g in range(3):
                vals = [buys[t][i][g] / caps[t] for t in ("AAA", "BBB", "CCC")]
                assert flows.values[i, g] == pytest.approx(sum(vals) / 3, rel=0, abs=1e-18)

    def test_one_row_per_date_three_columns(self):
        days = weekdays(date(2021, 1, 4), 6)
        spec = {
            "AAA": [(d, 10000.0, 100e9, (1e9, -5e8, -5e8)) for d in days],
            "BBB": [(d, 9000.0, 60e9, (2e8, 2e8, -4e8)) for d in days[2:]],
        }
        flows = aggregate_market_flows(make_panel(spec), "matched_filter")
        assert flows.values.shape == (6, 3)
        assert flows.dates == tuple(days)

    def test_unknown_normalizer(self):
        days = weekdays(date(2021, 1, 4), 2)
        spec = {"AAA": [(d, 10000.0, 100e9, (1e9, 0.0, 0.0)) for d in days]}
        with pytest.raises(ValueError):
            aggregate_market_flows(make_panel(spec), "bogus")

    def test_flows_csv_round_trip(self, tmp_path):
        days = weekdays(date(2021, 1, 4), 4)
        spec = {"AAA": [(d, 10000.0, 100e9, (1e9, -5e8, -5e8)) for d in days]}
        flows = aggregate_market_flows(make_panel(spec), "matched_filter")
        path = tmp_path / "flows.csv"
        write_flows_csv(flows, path)
        again = read_flows_csv(path)
        assert again.dates == flows.dates
        assert np.array_equal(again.values, flows.values)


def test_record_invariant_checks():
    assert make_record().violation() is None
    assert make_record(market_cap=0.0).violation() is not None
    bad_low = make_record(low=20000.0)
    assert bad_low.violation() is not None

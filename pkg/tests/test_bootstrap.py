"""Circular block bootstrap confidence intervals."""

import numpy as np
import pytest

from flowlab.backtest import block_bootstrap_ci
from flowlab.errors import SeriesTooShort


def mean_stat(x):
    return float(np.mean(x))


def test_constant_series_zero_width():
    ci = block_bootstrap_ci(np.full(100, 3.25), mean_stat, "mean", seed=0)
    assert ci.lower == ci.upper == ci.point == 3.25


def test_deterministic_given_seed():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(200)
    a = block_bootstrap_ci(x, mean_stat, seed=7)
    b = block_bootstrap_ci(x, mean_stat, seed=7)
    c = block_bootstrap_ci(x, mean_stat, seed=8)
    assert (a.lower, a.upper) == (b.lower, b.upper)
    assert (a.lower, a.upper) != (c.lower, c.upper)


def test_width_matches_clt_for_iid_mean():
    # CLT oracle: 95% interval width for the mean is 2 * 1.96 / sqrt(T)
    t = 1000
    widths = []
    for seed in range(20):
        x = np.random.default_rng(100 + seed).standard_normal(t)
        ci = block_bootstrap_ci(x, mean_stat, block_length=21, replications=1000, seed=seed)
        widths.append(ci.upper - ci.lower)
    target = 2 * 1.96 / np.sqrt(t)
    assert abs(np.mean(widths) - target) / target < 0.25


def test_coverage_of_true_mean():
    # smaller Monte Carlo here; the full 100-trial study runs in acceptance
    hits = 0
    trials = 30
    for seed in range(trials):
        x = np.random.default_rng(1000 + seed).standard_normal(500)
        ci = block_bootstrap_ci(x, mean_stat, block_length=21, replications=500, seed=seed)
        hits += ci.lower <= 0.0 <= ci.upper
    assert hits >= int(0.85 * trials)


def test_paired_columns_resampled_together():
    rng = np.random.default_rng(2)
    t = 500
    a = rng.standard_normal(t)
    b = 0.8 * a + 0.6 * rng.standard_normal(t)
    pairs = np.column_stack([a, b])

    def corr_stat(x):
        return float(np.corrcoef(x[:, 0], x[:, 1])[0, 1])

    ci = block_bootstrap_ci(pairs, corr_stat, "corr", seed=3)
    assert ci.lower <= ci.point <= ci.upper
    assert ci.lower > 0.5  # true correlation 0.8 is far from zero


def test_series_too_short():
    with pytest.raises(SeriesTooShort):
        block_bootstrap_ci(np.zeros(41), mean_stat, block_length=21)


def test_planted_correlation_coverage():
    # CI for a correlation statistic covers the planted value in most trials
    rho, t = 0.4, 500
    covered = 0
    for trial in range(100):
        rng = np.random.default_rng(9000 + trial)
        a = rng.standard_normal(t)
        b = rho * a + np.sqrt(1 - rho * rho) * rng.standard_normal(t)
        pairs = np.column_stack([a, b])
        ci = block_bootstrap_ci(
            pairs,
            lambda x: float(np.corrcoef(x[:, 0], x[:, 1])[0, 1]),
            "corr",
            block_length=21,
            replications=500,
            seed=trial,
        )
        covered += ci.lower <= rho <= ci.upper
    assert covered >= 90


def test_blocks_preserve_serial_dependence():
    # AR(1) data: block bootstrap widens the mean CI relative to iid shuffling
    rng = np.random.default_rng(4)
    t, phi = 1000, 0.8
    eps = rng.standard_normal(t)
    x = np.empty(t)
    x[0] = eps[0]
    for i in range(1, t):
        x[i] = phi * x[i - 1] + eps[i]
    block = block_bootstrap_ci(x, mean_stat, block_length=42, replications=1000, seed=5)
    single = block_bootstrap_ci(x, mean_stat, block_length=1, replications=1000, seed=5)
    assert (block.upper - block.lower) > 1.5 * (single.upper - single.lower)

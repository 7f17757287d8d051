#!/usr/bin/env python3
"""Strategy comparison on a panel with a planted normalized-flow signal.

Raw flows rank mostly by size (big caps trade big notional), so a raw-flow
momentum portfolio keeps buying mega-caps regardless of buying pressure.
Normalizing by market cap exposes the planted cross-sectional signal. The
IC1 timing strategy trades the whole market on the sign of one latent factor
and bears full market volatility for a thinner edge.
"""

import warnings

import numpy as np

from flowlab import backtest as bt
from flowlab import ica as ica_mod
from flowlab import panel as panel_mod
from flowlab.synth import SynthConfig, generate, random_mixing

warnings.filterwarnings("ignore")

cfg = SynthConfig(
    n_stocks=30, n_days=500, seed=7, flow_to_return_coeff=0.012, flow_dispersion=0.9,
    mixing_matrix=random_mixing(np.random.default_rng(7)),
)
panel = generate(cfg).panel

rows = []
rep = bt.run_momentum(panel, bt.flow_signal(panel, "matched_filter"))
rows.append(("momentum (matched filter)", rep))
rep = bt.run_momentum(panel, bt.flow_signal(panel, "raw"))
rows.append(("momentum (raw flows)", rep))

flows = panel_mod.aggregate_market_flows(panel, "matched_filter")
result = ica_mod.extract_components(flows, seed=7)
rep = bt.run_ica_factor(flows, panel, result.components[:, 0])
rows.append(("IC1 sign timing", rep))

print(f"{'strategy':28s} {'sharpe':>7s} {'cum ret':>9s} {'max dd':>8s} {'hit':>6s} {'t/o':>5s}")
for name, r in rows:
    print(f"{name:28s} {r.sharpe_net:7.2f} {r.cumulative_return:9.1%} "
          f"{r.max_drawdown:8.1%} {r.hit_rate:6.1%} {r.turnover:5.2f}")
print("\n(all net of a 10bp round-trip cost on one-sided turnover)")

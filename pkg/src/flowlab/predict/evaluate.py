"""Out-of-sample prediction metrics for any predictor with a .predict method."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequences import SequenceDataset

TRADING_DAYS = 252


@dataclass(frozen=True, eq=False)
class PredictionReport:
    rmse: float
    pearson_correlation: float
    hit_rate: float
    information_ratio: float
    prediction_std: float
    attention_weight_profile: np.ndarray | None
    collapsed: bool  # True when the prediction vector has exactly zero variance

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "pearson_correlation": self.pearson_correlation,
            "hit_rate": self.hit_rate,
            "information_ratio": self.information_ratio,
            "prediction_std": self.prediction_std,
            "attention_weight_profile": (
                None
                if self.attention_weight_profile is None
                else [float(v) for v in self.attention_weight_profile]
            ),
            "collapsed": self.collapsed,
        }


def information_ratio(
    predictions: np.ndarray, targets: np.ndarray, dates, tickers, decile: float = 0.1
) -> float:
    """Annualized mean/sd of the daily signal-sorted long-short return.

    Each date's samples are ranked by prediction; the top and bottom
    max(1, floor(n * decile)) names form the legs. Dates with fewer than two
    samples are skipped; with fewer than two usable dates, or a zero-sd
    stream, the ratio is reported as 0.
    """
    by_date: dict = {}
    for i, d in enumerate(dates):
        by_date.setdefault(d, []).append(i)
    daily = []
    for d in sorted(by_date):
        idx = by_date[d]
        if len(idx) < 2:
            continue
        k = max(1, int(len(idx) * decile))
        ranked = sorted(idx, key=lambda i: (-predictions[i], tickers[i]))
        long = ranked[:k]
        short = ranked[-k:]
        daily.append(np.mean(targets[long]) - np.mean(targets[short]))
    if len(daily) < 2:
        return 0.0
    daily = np.array(daily)
    sd = daily.std(ddof=1)
    if sd == 0:
        return 0.0
    return float(daily.mean() / sd * np.sqrt(TRADING_DAYS))


def evaluate(model, test: SequenceDataset) -> PredictionReport:
    """Score a predictor on a held-out sequence dataset.

    Pearson correlation of a zero-variance prediction vector is undefined and
    reported as 0 with the collapsed flag set. Hit rate counts a prediction as
    correct only when its sign is nonzero and matches the realized sign.
    """
    if len(test) == 0:
        raise ValueError("test split is empty")
    preds = np.asarray(model.predict(test.inputs), dtype=float)
    y = test.targets

    rmse = float(np.sqrt(np.mean((preds - y) ** 2)))
    pred_std = float(np.std(preds))
    collapsed = pred_std == 0.0
    if collapsed or np.std(y) == 0:
        corr = 0.0
    else:
        corr = float(np.corrcoef(preds, y)[0, 1])
    hits = (np.sign(preds) == np.sign(y)) & (np.sign(preds) != 0)
    hit_rate = float(np.mean(hits))
    ir = information_ratio(preds, y, test.dates, test.tickers)

    profile = None
    if hasattr(model, "mean_attention"):
        profile = np.asarray(model.mean_attention(test.inputs), dtype=float)
    return PredictionReport(rmse, corr, hit_rate, ir, pred_std, profile, collapsed)

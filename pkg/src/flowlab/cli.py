"""flowlab command line: subcommands over the full investor-flow pipeline.

Exit codes: 0 on success, 1 on a domain error (message on stderr), 2 on usage
errors. Every artifact is written deterministically (shortest round-trip float
text, sorted JSON keys, no timestamps), so a seeded rerun reproduces primary
outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date as Date
from pathlib import Path

import numpy as np

from . import backtest as bt
from . import ica as ica_mod
from . import panel as panel_mod
from . import synth as synth_mod
from . import wavelet
from .config import RunConfig, load_config, parse_pair
from .errors import FlowLabError, MissingArtifact
from .panel import GROUPS, FlowMatrix
from .predict import build_sequences, evaluate, lasso_fit, ridge_fit, split_dataset, train
from .predict.lstm import LstmModel


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_factors_csv(path) -> dict:
    """Factor CSV: a date column plus one column per named factor."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = header[1:]
        dates, columns = [], [[] for _ in names]
        for row in reader:
            dates.append(Date.fromisoformat(row[0]))
            for i, v in enumerate(row[1:]):
                columns[i].append(float(v))
    return {name: (tuple(dates), np.array(col)) for name, col in zip(names, columns)}


def write_signal_csv(signal: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ticker", "date", "signal"])
        for (ticker, d), v in sorted(signal.items()):
            writer.writerow([ticker, d.isoformat(), repr(float(v))])


def read_signal_csv(path) -> dict:
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out[(row["ticker"], Date.fromisoformat(row["date"]))] = float(row["signal"])
    return out


def _load_run_config(path) -> RunConfig:
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    return load_config(path)


# ---------------------------------------------------------------- ingest


def cmd_ingest(args) -> int:
    cfg = _load_run_config(args.config)
    panel = panel_mod.ingest_csv(args.input)
    cleaned = panel_mod.clean(panel, cfg.clean)
    panel_mod.write_csv(cleaned, args.output)
    print(
        f"ingested {len(panel.records)} records ({panel.n_rejected} rejected), "
        f"cleaned to {len(cleaned.records)} records, "
        f"{len(cleaned.universe)} tickers, {len(cleaned.calendar)} dates"
    )
    return 0


# ---------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    cfg = _load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    sp = synth_mod.generate(cfg.synth_config())
    panel_mod.write_csv(sp.panel, args.output)
    if args.truth:
        synth_mod.write_truth_csv(sp, args.truth)
    print(
        f"generated {len(sp.panel.records)} records, "
        f"{len(sp.panel.universe)} tickers x {len(sp.panel.calendar)} days (seed {cfg.seed})"
    )
    return 0


# ---------------------------------------------------------------- normalize


def cmd_normalize(args) -> int:
    cfg = _load_run_config(args.config)
    method = {"matched": "matched_filter"}.get(args.method, args.method)
    panel = panel_mod.ingest_csv(args.panel)
    sigma = cfg.clean.winsorize_sigma if cfg.winsorize_flows else None
    flows = panel_mod.aggregate_market_flows(
        panel, method, zscore_window=cfg.zscore_window, winsorize_sigma=sigma
    )
    panel_mod.write_flows_csv(flows, args.output)
    print(f"wrote {len(flows.dates)} x 3 flow matrix ({method})")
    return 0


# ---------------------------------------------------------------- ica


def _write_mixing_csv(path, mixing) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "ic1", "ic2", "ic3"])
        for gi, group in enumerate(GROUPS):
            writer.writerow([group, *[repr(float(v)) for v in mixing[gi]]])


def _write_components_csv(path, dates, components) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "ic1", "ic2", "ic3"])
        for d, row in zip(dates, components):
            writer.writerow([d.isoformat(), *[repr(float(v)) for v in row]])


def cmd_ica(args) -> int:
    cfg = _load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    flows = panel_mod.read_flows_csv(args.flows)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    result = ica_mod.extract_components(
        flows, max_iter=cfg.ica_max_iter, tol=cfg.ica_tol, seed=cfg.seed
    )
    factors = read_factors_csv(args.factors) if args.factors else None
    if factors:
        table = ica_mod.interpret(result.components, flows.dates, factors)
        # orient each component so its top factor correlation is positive
        order = np.arange(result.components.shape[1])
        ref_cols = []
        for j in order:
            name = table.top_factor[j]
            fdates, fvalues = factors[name]
            ref_cols.append(_project_on_dates(flows.dates, fdates, fvalues))
        result = ica_mod.align_components(result, np.column_stack(ref_cols))
        table = ica_mod.interpret(result.components, flows.dates, factors)
        with open(outdir / "correlations.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["component", "factor", "r", "p_value", "top"])
            for c, f, r, p in table.rows:
                writer.writerow(
                    [f"ic{c + 1}", f, repr(float(r)), repr(float(p)), int(table.top_factor[c] == f)]
                )

    _write_mixing_csv(outdir / "mixing.csv", result.mixing)
    _write_components_csv(outdir / "components.csv", flows.dates, result.components)

    if args.rolling:
        trace = ica_mod.rolling_stability(
            flows,
            window=args.window or cfg.ica_window,
            step=args.step or cfg.ica_step,
            factors=factors,
            seed=cfg.seed,
            max_iter=cfg.ica_max_iter,
            tol=cfg.ica_tol,
        )
        with open(outdir / "stability.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["window_start", "drift", "converged", "top_factor_ic1"]
                + [f"a{i + 1}{j + 1}" for i in range(3) for j in range(3)]
            )
            for k, start in enumerate(trace.window_starts):
                drift = "" if k == 0 else repr(float(trace.frobenius_drift[k - 1]))
                top = trace.top_factors[k][0] if trace.top_factors[k] else ""
                writer.writerow(
                    [
                        start.isoformat() if hasattr(start, "isoformat") else start,
                        drift,
                        int(trace.converged[k]),
                        top,
                    ]
                    + [repr(float(v)) for v in trace.mixings[k].ravel()]
                )
    print(f"ica artifacts written to {outdir} (converged={result.converged})")
    return 0


def _project_on_dates(dates, fdates, fvalues):
    lookup = dict(zip(fdates, fvalues))
    mean = float(np.mean(fvalues))
    return np.array([lookup.get(d, mean) for d in dates])


# ---------------------------------------------------------------- coherence


def cmd_coherence(args) -> int:
    cfg = _load_run_config(args.config)
    flows = panel_mod.read_flows_csv(args.flows)
    pair = parse_pair(args.pair)
    field = wavelet.coherence(
        flows.column(pair[0]), flows.column(pair[1]), args.smoothing or cfg.wavelet_smoothing
    )
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scale", "date", "coherence", "in_cone"])
        for si, scale in enumerate(field.scales):
            for ti, d in enumerate(flows.dates):
                writer.writerow(
                    [
                        scale,
                        d.isoformat(),
                        repr(float(field.coherence[si, ti])),
                        int(field.cone_of_influence[si, ti]),
                    ]
                )
    bands_path = out.parent / "bands.csv"
    new_file = not bands_path.exists()
    with open(bands_path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(["pair", "band", "days", "mean_coherence"])
        for b, (lo, hi) in enumerate(wavelet.BAND_EDGES):
            writer.writerow(
                [f"{pair[0]}:{pair[1]}", b + 1, f"{lo}-{hi}", repr(float(field.band_means[b]))]
            )
    print(f"coherence for {pair[0]}:{pair[1]} written to {out}")
    return 0


# ---------------------------------------------------------------- train


def _fit_model(cfg: RunConfig, dataset):
    train_ds, val_ds, test_ds = split_dataset(dataset, cfg.train_config().split)
    if cfg.train_model == "lstm":
        model = LstmModel(
            hidden1=cfg.hidden1,
            hidden2=cfg.hidden2,
            heads=cfg.heads,
            key_dim=cfg.key_dim,
            dropout_rate=cfg.dropout,
            seed=cfg.seed,
        )
        model, log = train(model, dataset, cfg.train_config())
        extra = {
            "epochs_trained": log.epochs_trained,
            "best_epoch": log.best_epoch,
            "param_count": log.param_count,
            "train_loss": log.train_loss,
            "val_loss": log.val_loss,
        }
    elif cfg.train_model == "ridge":
        model = ridge_fit(train_ds.inputs, train_ds.targets, cfg.penalty_lambda)
        extra = {"lambda": cfg.penalty_lambda}
    else:
        model = lasso_fit(train_ds.inputs, train_ds.targets, cfg.penalty_lambda)
        extra = {
            "lambda": cfg.penalty_lambda,
            "nonzero_coefficients": int(np.count_nonzero(model.coef)),
        }
    return model, test_ds, extra


def _model_payload(cfg: RunConfig, model) -> dict:
    if cfg.train_model == "lstm":
        payload = model.to_dict()
    else:
        payload = {
            "coef": model.coef.tolist(),
            "intercept": model.intercept,
            "feature_means": model.feature_means.tolist(),
            "feature_sds": model.feature_sds.tolist(),
            "lambda": model.lam,
        }
    payload["kind"] = cfg.train_model
    payload["config"] = {
        "lookback": cfg.lookback,
        "normalizer": cfg.normalize_method,
        "seed": cfg.seed,
    }
    return payload


def cmd_train(args) -> int:
    cfg = _load_run_config(args.config)
    if args.model:
        cfg.train_model = args.model
    if args.seed is not None:
        cfg.seed = args.seed
    panel = panel_mod.ingest_csv(args.panel)
    dataset = build_sequences(
        panel, cfg.normalize_method, lookback=cfg.lookback, zscore_window=cfg.zscore_window
    )
    model, test_ds, extra = _fit_model(cfg, dataset)
    report = evaluate(model, test_ds)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "model.json", _model_payload(cfg, model))
    payload = report.to_dict()
    payload.update({"model": cfg.train_model, "n_test_samples": len(test_ds), **extra})
    _write_json(outdir / "report.json", payload)
    print(
        f"{cfg.train_model}: rmse {report.rmse:.6f}, corr {report.pearson_correlation:.4f}, "
        f"hit {report.hit_rate:.3f}, pred_std {report.prediction_std:.6f}"
    )
    return 0


# ---------------------------------------------------------------- backtest


def _bootstrap_blocks(report: bt.BacktestReport, cfg: RunConfig, seed: int) -> list[dict]:
    r = report.daily_returns
    if len(r) < 2 * cfg.block_length:
        return []
    blocks = [
        bt.block_bootstrap_ci(
            r, lambda v: float(np.mean(v)), "mean_daily_return",
            cfg.block_length, cfg.replications, seed,
        )
    ]
    if np.std(r, ddof=1) > 0:
        blocks.append(
            bt.block_bootstrap_ci(
                r,
                lambda v: float(np.mean(v) / np.std(v, ddof=1) * np.sqrt(252)),
                "sharpe",
                cfg.block_length,
                cfg.replications,
                seed + 1,
            )
        )
    return [b.to_dict() for b in blocks]


def _write_backtest(report: bt.BacktestReport, cfg: RunConfig, output, seed: int, label: str):
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    payload["strategy"] = label
    payload["confidence_intervals"] = _bootstrap_blocks(report, cfg, seed)
    _write_json(out, payload)
    sidecar = out.with_suffix(".daily.csv")
    with open(sidecar, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "net_return", "gross_return", "turnover"])
        for d, net, gross, to in zip(
            report.dates, report.daily_returns, report.daily_gross, report.turnover_series
        ):
            writer.writerow([d.isoformat(), repr(float(net)), repr(float(gross)), repr(float(to))])
    print(
        f"{label}: sharpe {report.sharpe_net:.3f}, cumulative {report.cumulative_return:.3%}, "
        f"mdd {report.max_drawdown:.3%}, hit {report.hit_rate:.3f}"
    )


def cmd_backtest(args) -> int:
    cfg = _load_run_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.cost_bp is not None:
        cfg.strategy = bt.StrategyConfig(
            kind=cfg.strategy.kind,
            decile=cfg.strategy.decile,
            cost_roundtrip=args.cost_bp / 10_000.0,
            min_stocks=cfg.strategy.min_stocks,
        )
    panel = panel_mod.ingest_csv(args.panel)
    if args.strategy == "momentum":
        if args.signal:
            signal = read_signal_csv(args.signal)
        else:
            signal = bt.flow_signal(panel, args.normalizer)
        report = bt.run_momentum(panel, signal, cfg.strategy)
        label = f"momentum_{args.normalizer if not args.signal else 'file'}"
    else:
        if not args.signal:
            raise MissingArtifact("ica strategy needs --signal (components.csv)")
        comp = panel_mod.read_flows_csv(args.signal)
        report = bt.run_ica_factor(comp, panel, comp.values[:, 0], cfg.strategy)
        label = "ica_timing"
    _write_backtest(report, cfg, args.output, cfg.seed, label)
    return 0


# ---------------------------------------------------------------- report


def _require(path: Path, name: str) -> Path:
    if not path.exists():
        raise MissingArtifact(name)
    return path


def cmd_report(args) -> int:
    rundir = Path(args.rundir)
    summary: dict = {}

    corr_path = _require(rundir / "ica" / "correlations.csv", "ica/correlations.csv")
    ica_rows = []
    with open(corr_path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ica_rows.append(row)
    top = [r for r in ica_rows if r["top"] == "1"]
    summary["ica_interpretation"] = [
        {"component": r["component"], "top_factor": r["factor"], "r": float(r["r"])} for r in top
    ]

    bands_path = _require(rundir / "coherence" / "bands.csv", "coherence/bands.csv")
    with open(bands_path, newline="", encoding="utf-8") as fh:
        summary["coherence_bands"] = [
            {"pair": r["pair"], "band": int(r["band"]), "days": r["days"],
             "mean_coherence": float(r["mean_coherence"])}
            for r in csv.DictReader(fh)
        ]

    pred_path = _require(rundir / "train" / "report.json", "train/report.json")
    with open(pred_path, encoding="utf-8") as fh:
        summary["prediction"] = json.load(fh)

    bt_dir = _require(rundir / "backtest", "backtest")
    strategies = {}
    for p in sorted(bt_dir.glob("*.json")):
        with open(p, encoding="utf-8") as fh:
            payload = json.load(fh)
        strategies[payload["strategy"]] = {
            "sharpe_net": payload["sharpe_net"],
            "cumulative_return": payload["cumulative_return"],
            "max_drawdown": payload["max_drawdown"],
            "hit_rate": payload["hit_rate"],
        }
    if not strategies:
        raise MissingArtifact("backtest/*.json")
    summary["strategies"] = strategies

    _write_json(rundir / "summary.json", summary)
    lines = ["flowlab run summary", "===================", ""]
    lines.append("ICA component interpretation:")
    for row in summary["ica_interpretation"]:
        lines.append(f"  {row['component']}: {row['top_factor']} (r = {row['r']:.4g})")
    lines.append("")
    lines.append("Coherence band means:")
    for row in summary["coherence_bands"]:
        lines.append(f"  {row['pair']:28s} band {row['band']} ({row['days']}d): "
                     f"{row['mean_coherence']:.4g}")
    lines.append("")
    pred = summary["prediction"]
    lines.append(
        f"Prediction ({pred.get('model', '?')}): rmse {pred['rmse']:.4g}, "
        f"corr {pred['pearson_correlation']:.4g}, hit {pred['hit_rate']:.4g}, "
        f"pred_std {pred['prediction_std']:.4g}"
    )
    lines.append("")
    lines.append("Strategy comparison (net of costs):")
    for name, row in strategies.items():
        lines.append(
            f"  {name:<20s} sharpe {row['sharpe_net']:8.4g}  cum {row['cumulative_return']:9.4g}  "
            f"mdd {row['max_drawdown']:8.4g}  hit {row['hit_rate']:.4g}"
        )
    text = "\n".join(lines) + "\n"
    with open(rundir / "summary.txt", "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


# ---------------------------------------------------------------- pipeline


def cmd_pipeline(args) -> int:
    cfg = load_config(args.config)
    rundir = Path(args.output or cfg.output_dir)
    rundir.mkdir(parents=True, exist_ok=True)

    # 1. panel: synthesize or ingest, then clean
    if cfg.input_panel:
        raw = panel_mod.ingest_csv(cfg.input_panel)
        sp = None
        print(f"[pipeline] ingested {len(raw.records)} records from {cfg.input_panel}")
    else:
        sp = synth_mod.generate(cfg.synth_config())
        raw = sp.panel
        synth_mod.write_truth_csv(sp, rundir / "truth.csv")
        print(f"[pipeline] synthesized {len(raw.records)} records (seed {cfg.seed})")
    cleaned = panel_mod.clean(raw, cfg.clean)
    panel_mod.write_csv(cleaned, rundir / "panel.csv")
    print(f"[pipeline] cleaned panel: {len(cleaned.universe)} tickers, "
          f"{len(cleaned.calendar)} dates")

    # 2. normalized market flows (matched filter, plus raw for comparison)
    sigma = cfg.clean.winsorize_sigma if cfg.winsorize_flows else None
    flows = panel_mod.aggregate_market_flows(cleaned, "matched_filter", winsorize_sigma=sigma)
    panel_mod.write_flows_csv(flows, rundir / "flows_matched.csv")
    flows_raw = panel_mod.aggregate_market_flows(cleaned, "raw")
    panel_mod.write_flows_csv(flows_raw, rundir / "flows_raw.csv")
    print(f"[pipeline] flow matrices written ({len(flows.dates)} dates)")

    # 3. factors: equal-weight market return, plus planted sources when synthetic
    closes = {(r.ticker, r.date): r.close for r in cleaned.records}
    cal = cleaned.calendar
    mkt_dates, mkt = [], []
    for k in range(len(cal) - 1):
        day = [
            closes[(t, cal[k + 1])] / closes[(t, cal[k])] - 1.0
            for t in cleaned.universe
            if (t, cal[k]) in closes and (t, cal[k + 1]) in closes
        ]
        if day:
            mkt_dates.append(cal[k + 1])
            mkt.append(float(np.mean(day)))
    factors = {"market_return": (tuple(mkt_dates), np.array(mkt))}
    if sp is not None:
        for j in range(3):
            factors[f"source_{j + 1}"] = (tuple(sp.panel.calendar), sp.true_sources[:, j])
    with open(rundir / "factors.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        names = list(factors)
        writer.writerow(["date", *names])
        lookups = {n: dict(zip(*factors[n])) for n in names}
        for d in cal:
            if all(d in lookups[n] for n in names):
                writer.writerow([d.isoformat(), *[repr(float(lookups[n][d])) for n in names]])

    # 4. ica
    rc = cmd_ica(
        argparse.Namespace(
            config=args.config,
            seed=cfg.seed,
            flows=str(rundir / "flows_matched.csv"),
            factors=str(rundir / "factors.csv"),
            output=str(rundir / "ica"),
            rolling=cfg.ica_rolling,
            window=cfg.ica_window,
            step=cfg.ica_step,
        )
    )
    if rc != 0:
        return rc

    # 5. coherence for each configured pair
    bands = rundir / "coherence" / "bands.csv"
    if bands.exists():
        bands.unlink()
    for a, b in cfg.wavelet_pairs:
        rc = cmd_coherence(
            argparse.Namespace(
                config=args.config,
                flows=str(rundir / "flows_matched.csv"),
                pair=f"{a}:{b}",
                smoothing=cfg.wavelet_smoothing,
                output=str(rundir / "coherence" / f"{a}_{b}.csv"),
            )
        )
        if rc != 0:
            return rc

    # 6. train the configured model
    rc = cmd_train(
        argparse.Namespace(
            config=args.config,
            model=cfg.train_model,
            seed=cfg.seed,
            panel=str(rundir / "panel.csv"),
            out=str(rundir / "train"),
        )
    )
    if rc != 0:
        return rc

    # 7. backtests: momentum on matched and raw signals, and IC1 timing
    signal_matched = bt.flow_signal(cleaned, "matched_filter")
    report = bt.run_momentum(cleaned, signal_matched, cfg.strategy)
    _write_backtest(report, cfg, rundir / "backtest" / "momentum_matched.json",
                    cfg.seed, "momentum_matched")
    signal_raw = bt.flow_signal(cleaned, "raw")
    report = bt.run_momentum(cleaned, signal_raw, cfg.strategy)
    _write_backtest(report, cfg, rundir / "backtest" / "momentum_raw.json",
                    cfg.seed, "momentum_raw")
    comp = panel_mod.read_flows_csv(rundir / "ica" / "components.csv")
    report = bt.run_ica_factor(comp, cleaned, comp.values[:, 0], cfg.strategy)
    _write_backtest(report, cfg, rundir / "backtest" / "ica_timing.json",
                    cfg.seed, "ica_timing")

    print(f"[pipeline] complete: artifacts in {rundir}")
    return 0


# ---------------------------------------------------------------- dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowlab",
        description="Investor-flow analysis pipeline: normalization, ICA, "
        "wavelet coherence, forecasting and backtesting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read, validate and clean a panel CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic panel with planted truth")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--truth", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("normalize", help="aggregate a panel into a market flow matrix")
    p.add_argument("--method", choices=["raw", "matched", "matched_filter", "zscore"],
                   default="matched_filter")
    p.add_argument("--panel", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("ica", help="extract independent components from a flow matrix")
    p.add_argument("--flows", required=True)
    p.add_argument("--factors", default=None)
    p.add_argument("--rolling", action="store_true")
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--step", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ica)

    p = sub.add_parser("coherence", help="wavelet coherence between two investor groups")
    p.add_argument("--flows", required=True)
    p.add_argument("--pair", required=True, help="for example foreign:inst")
    p.add_argument("--smoothing", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("train", help="fit a forecaster and write model + report")
    p.add_argument("--model", choices=["lstm", "ridge", "lasso"], default=None)
    p.add_argument("--panel", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("backtest", help="run a strategy and write its report")
    p.add_argument("--strategy", choices=["momentum", "ica"], required=True)
    p.add_argument("--panel", required=True)
    p.add_argument("--signal", default=None)
    p.add_argument("--normalizer", choices=["matched_filter", "raw"], default="matched_filter")
    p.add_argument("--cost-bp", type=float, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("report", help="consolidate a run directory into one summary")
    p.add_argument("rundir")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="run the full pipeline from one config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def dispatch(argv=None) -> int:
    """Run one subcommand; 0 on success, 1 on domain errors, 2 on usage errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FlowLabError as exc:
        print(f"flowlab {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"flowlab {args.command}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())

"""Declarative run configuration: one flat key-value file with sections.

The format is INI-style (configparser): `[section]` headers over `key = value`
lines, `#` comments. Unknown sections or keys are rejected outright, and every
value is validated against the preconditions of the module that will consume
it, so a config that parses cleanly will not blow up mid-pipeline. The
FLOWLAB_SEED environment variable overrides [run] seed for sweep runs.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .panel import CleaningConfig
from .predict import TrainConfig
from .backtest import StrategyConfig
from .synth import SOURCE_KINDS, SynthConfig, default_mixing, random_mixing

_KNOWN_KEYS = {
    "run": {"seed", "output_dir", "input_panel"},
    "synth": {
        "n_stocks",
        "n_days",
        "source_kinds",
        "mixing",
        "flow_to_return_coeff",
        "return_noise_sigma",
        "return_mean",
        "flow_dispersion",
    },
    "clean": {"min_days_per_year", "winsorize_sigma", "min_market_cap", "forward_fill"},
    "normalize": {"method", "zscore_window", "winsorize"},
    "ica": {"window", "step", "rolling", "max_iter", "tol"},
    "wavelet": {"smoothing", "pairs"},
    "train": {
        "model",
        "lookback",
        "learning_rate",
        "max_epochs",
        "batch_size",
        "patience",
        "lambda",
        "hidden1",
        "hidden2",
        "heads",
        "key_dim",
        "dropout",
    },
    "strategy": {"decile", "cost_bp", "min_stocks", "block_length", "replications"},
}

_GROUP_ALIASES = {
    "foreign": "foreign",
    "inst": "institutional",
    "institutional": "institutional",
    "indiv": "individual",
    "individual": "individual",
}


def resolve_group(name: str) -> str:
    try:
        return _GROUP_ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown investor group: {name!r}") from None


def parse_pair(text: str) -> tuple[str, str]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"pair must look like foreign:inst, got {text!r}")
    return resolve_group(parts[0]), resolve_group(parts[1])


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "run"
    input_panel: str | None = None

    synth_n_stocks: int = 20
    synth_n_days: int = 400
    synth_source_kinds: tuple[str, str, str] = ("laplacian", "laplacian", "laplacian")
    synth_mixing: str | tuple = "default"  # "default", "random", or 9 numbers
    synth_flow_to_return_coeff: float = 0.0
    synth_return_noise_sigma: float = 0.0349
    synth_return_mean: float = 0.00028
    synth_flow_dispersion: float = 0.3

    clean: CleaningConfig = field(default_factory=CleaningConfig)

    normalize_method: str = "matched_filter"
    zscore_window: int = 60
    winsorize_flows: bool = True

    ica_window: int = 252
    ica_step: int = 21
    ica_rolling: bool = True
    ica_max_iter: int = 1000
    ica_tol: float = 1e-6

    wavelet_smoothing: int = 15
    wavelet_pairs: tuple = (
        ("foreign", "institutional"),
        ("foreign", "individual"),
        ("institutional", "individual"),
    )

    train_model: str = "lstm"
    lookback: int = 10
    learning_rate: float = 1e-3
    max_epochs: int = 200
    batch_size: int = 256
    patience: int = 10
    penalty_lambda: float = 0.1
    hidden1: int = 64
    hidden2: int = 32
    heads: int = 4
    key_dim: int = 32
    dropout: float = 0.2

    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    block_length: int = 21
    replications: int = 1000

    def synth_config(self) -> SynthConfig:
        mixing = self.synth_mixing
        if mixing == "default":
            matrix = default_mixing()
        elif mixing == "random":
            matrix = random_mixing(np.random.default_rng(self.seed))
        else:
            matrix = np.array(mixing, dtype=float).reshape(3, 3)
        return SynthConfig(
            n_stocks=self.synth_n_stocks,
            n_days=self.synth_n_days,
            mixing_matrix=matrix,
            source_kind=self.synth_source_kinds,
            flow_to_return_coeff=self.synth_flow_to_return_coeff,
            return_noise_sigma=self.synth_return_noise_sigma,
            return_mean=self.synth_return_mean,
            seed=self.seed,
            flow_dispersion=self.synth_flow_dispersion,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            patience=self.patience,
            max_epochs=self.max_epochs,
            batch_size=self.batch_size,
            seed=self.seed,
        )

    def validate(self) -> None:
        """Fail fast on anything a downstream module precondition would reject."""
        self.clean.validate()
        self.strategy.validate()
        self.train_config().validate()
        self.synth_config().validate()
        if self.normalize_method not in ("raw", "matched_filter", "zscore"):
            raise ConfigError(f"unknown normalize method {self.normalize_method!r}")
        if self.zscore_window < 2:
            raise ConfigError("zscore_window must be >= 2")
        if self.wavelet_smoothing < 3 or self.wavelet_smoothing % 2 == 0:
            raise ConfigError("wavelet smoothing must be odd and >= 3")
        if self.ica_window < 30 or self.ica_step < 1:
            raise ConfigError("ica window must be >= 30 and step >= 1")
        if self.train_model not in ("lstm", "ridge", "lasso"):
            raise ConfigError(f"unknown train model {self.train_model!r}")
        if self.lookback < 1:
            raise ConfigError("lookback must be >= 1")
        if self.penalty_lambda < 0:
            raise ConfigError("lambda must be >= 0")
        if not 0 <= self.dropout < 1:
            raise ConfigError("dropout must be in [0, 1)")
        if self.block_length < 1 or self.replications < 1:
            raise ConfigError("block_length and replications must be positive")
        if self.input_panel is not None and not os.path.exists(self.input_panel):
            raise ConfigError(f"input_panel does not exist: {self.input_panel}")


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "1"):
                return True
            if lowered in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from exc


def load_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    parser = configparser.ConfigParser()
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")

    cfg = RunConfig()
    cfg.seed = _get(parser, "run", "seed", int, cfg.seed)
    env_seed = os.environ.get("FLOWLAB_SEED")
    if env_seed is not None:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"FLOWLAB_SEED is not an integer: {env_seed!r}") from None
    cfg.output_dir = _get(parser, "run", "output_dir", str, cfg.output_dir)
    cfg.input_panel = _get(parser, "run", "input_panel", str, cfg.input_panel)

    cfg.synth_n_stocks = _get(parser, "synth", "n_stocks", int, cfg.synth_n_stocks)
    cfg.synth_n_days = _get(parser, "synth", "n_days", int, cfg.synth_n_days)
    kinds = _get(parser, "synth", "source_kinds", str, None)
    if kinds is not None:
        parts = tuple(kinds.split())
        if len(parts) != 3 or any(k not in SOURCE_KINDS for k in parts):
            raise ConfigError(f"source_kinds must be 3 of {SOURCE_KINDS}")
        cfg.synth_source_kinds = parts
    mixing = _get(parser, "synth", "mixing", str, None)
    if mixing is not None:
        if mixing in ("default", "random"):
            cfg.synth_mixing = mixing
        else:
            values = [float(v) for v in mixing.replace(",", " ").split()]
            if len(values) != 9:
                raise ConfigError("mixing must be 'default', 'random' or 9 numbers")
            cfg.synth_mixing = tuple(values)
    cfg.synth_flow_to_return_coeff = _get(
        parser, "synth", "flow_to_return_coeff", float, cfg.synth_flow_to_return_coeff
    )
    cfg.synth_return_noise_sigma = _get(
        parser, "synth", "return_noise_sigma", float, cfg.synth_return_noise_sigma
    )
    cfg.synth_return_mean = _get(parser, "synth", "return_mean", float, cfg.synth_return_mean)
    cfg.synth_flow_dispersion = _get(
        parser, "synth", "flow_dispersion", float, cfg.synth_flow_dispersion
    )

    cfg.clean = CleaningConfig(
        min_days_per_year=_get(parser, "clean", "min_days_per_year", int, 20),
        winsorize_sigma=_get(parser, "clean", "winsorize_sigma", float, 5.0),
        min_market_cap=_get(parser, "clean", "min_market_cap", float, 50e9),
        forward_fill=_get(parser, "clean", "forward_fill", bool, True),
    )

    cfg.normalize_method = _get(parser, "normalize", "method", str, cfg.normalize_method)
    if cfg.normalize_method == "matched":
        cfg.normalize_method = "matched_filter"
    cfg.zscore_window = _get(parser, "normalize", "zscore_window", int, cfg.zscore_window)
    cfg.winsorize_flows = _get(parser, "normalize", "winsorize", bool, cfg.winsorize_flows)

    cfg.ica_window = _get(parser, "ica", "window", int, cfg.ica_window)
    cfg.ica_step = _get(parser, "ica", "step", int, cfg.ica_step)
    cfg.ica_rolling = _get(parser, "ica", "rolling", bool, cfg.ica_rolling)
    cfg.ica_max_iter = _get(parser, "ica", "max_iter", int, cfg.ica_max_iter)
    cfg.ica_tol = _get(parser, "ica", "tol", float, cfg.ica_tol)

    cfg.wavelet_smoothing = _get(parser, "wavelet", "smoothing", int, cfg.wavelet_smoothing)
    pairs = _get(parser, "wavelet", "pairs", str, None)
    if pairs is not None:
        cfg.wavelet_pairs = tuple(parse_pair(p) for p in pairs.split())

    cfg.train_model = _get(parser, "train", "model", str, cfg.train_model)
    cfg.lookback = _get(parser, "train", "lookback", int, cfg.lookback)
    cfg.learning_rate = _get(parser, "train", "learning_rate", float, cfg.learning_rate)
    cfg.max_epochs = _get(parser, "train", "max_epochs", int, cfg.max_epochs)
    cfg.batch_size = _get(parser, "train", "batch_size", int, cfg.batch_size)
    cfg.patience = _get(parser, "train", "patience", int, cfg.patience)
    cfg.penalty_lambda = _get(parser, "train", "lambda", float, cfg.penalty_lambda)
    cfg.hidden1 = _get(parser, "train", "hidden1", int, cfg.hidden1)
    cfg.hidden2 = _get(parser, "train", "hidden2", int, cfg.hidden2)
    cfg.heads = _get(parser, "train", "heads", int, cfg.heads)
    cfg.key_dim = _get(parser, "train", "key_dim", int, cfg.key_dim)
    cfg.dropout = _get(parser, "train", "dropout", float, cfg.dropout)

    cfg.strategy = StrategyConfig(
        decile=_get(parser, "strategy", "decile", float, 0.1),
        cost_roundtrip=_get(parser, "strategy", "cost_bp", float, 10.0) / 10_000.0,
        min_stocks=_get(parser, "strategy", "min_stocks", int, 10),
    )
    cfg.block_length = _get(parser, "strategy", "block_length", int, cfg.block_length)
    cfg.replications = _get(parser, "strategy", "replications", int, cfg.replications)

    cfg.validate()
    return cfg

"""Next-day return forecasting: sequence building, LSTM with attention, linear baselines."""

from .sequences import SequenceDataset, SequenceSample, build_sequences, split_dataset
from .lstm import LstmModel, TrainConfig, TrainingLog, lstm_forward, train
from .linear import LinearModel, lasso_fit, ridge_fit
from .evaluate import PredictionReport, evaluate

__all__ = [
    "SequenceDataset",
    "SequenceSample",
    "build_sequences",
    "split_dataset",
    "LstmModel",
    "TrainConfig",
    "TrainingLog",
    "lstm_forward",
    "train",
    "LinearModel",
    "ridge_fit",
    "lasso_fit",
    "PredictionReport",
    "evaluate",
]

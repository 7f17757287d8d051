#!/usr/bin/env python3
"""The forecaster collapse diagnostic, reproduced in miniature.

Trained on returns that are pure noise, the LSTM's loss-minimizing move is to
predict the unconditional mean: prediction variance shrivels, attention stays
uniform across lags and the hit rate hovers at chance. Give the same model a
strong planted signal and it learns it. Small layer sizes keep this quick;
the full-size reproduction runs in the acceptance suite.
"""

import numpy as np

from flowlab.predict import build_sequences, evaluate, split_dataset
from flowlab.predict.lstm import LstmModel, TrainConfig, train
from flowlab.synth import SynthConfig, generate


def run(label, coeff, noise):
    cfg = SynthConfig(
        n_stocks=10, n_days=220, seed=0,
        flow_to_return_coeff=coeff, return_noise_sigma=noise,
    )
    ds = build_sequences(generate(cfg).panel, "matched_filter", lookback=10)
    model = LstmModel(hidden1=16, hidden2=8, heads=2, key_dim=8, seed=0)
    model, log = train(model, ds, TrainConfig(max_epochs=25, patience=8, batch_size=128, seed=0))
    _, _, test = split_dataset(ds, (0.8, 0.1, 0.1))
    rep = evaluate(model, test)
    print(f"{label}:")
    print(f"  epochs {log.epochs_trained} (best {log.best_epoch}), "
          f"parameters {log.param_count}")
    print(f"  test correlation {rep.pearson_correlation:+.3f}, hit rate {rep.hit_rate:.3f}")
    print(f"  prediction sd {rep.prediction_std:.5f} vs target sd {np.std(test.targets):.5f}")
    profile = np.round(rep.attention_weight_profile, 3)
    print(f"  attention mass per lag: {profile}")


run("zero-signal returns (noise only)", coeff=0.0, noise=0.0349)
print()
run("strong planted signal", coeff=0.05, noise=0.002)

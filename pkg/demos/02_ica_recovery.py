#!/usr/bin/env python3
"""Recover a planted mixing matrix with FastICA and score it.

With plenty of data and heavy-tailed sources the fixed-point iteration nails
the mixing up to permutation and sign; alignment against the planted truth
resolves that ambiguity and the Amari index scores the recovery (0 = perfect).
A rolling re-estimation on data with a mid-sample rotation of the loadings
shows the stability diagnostic spiking exactly at the break.
"""

import numpy as np

from flowlab.ica import align_components, amari_distance, extract_components, rolling_stability

rng = np.random.default_rng(0)
t = 20_000
sources = rng.laplace(0.0, 1.0 / np.sqrt(2.0), size=(t, 3))
mixing = np.array([[0.9, 0.4, 0.2], [0.3, 0.8, 0.5], [0.1, 0.3, 0.9]])
x = sources @ mixing.T

result = extract_components(x, seed=0)
aligned = align_components(result, mixing)
print(f"converged in {result.iterations} iterations")
print(f"amari distance to planted mixing: {amari_distance(aligned.mixing, mixing):.4f}")
for j in range(3):
    r = np.corrcoef(aligned.components[:, j], sources[:, j])[0, 1]
    print(f"component {j + 1} vs planted source {j + 1}: r = {r:.4f}")

# plant a rotation of the loadings halfway through and watch the drift spike
half = t // 4
theta = np.pi / 4
rot = np.array([[np.cos(theta), -np.sin(theta), 0.0],
                [np.sin(theta), np.cos(theta), 0.0],
                [0.0, 0.0, 1.0]])
broken = np.vstack([sources[:half] @ mixing.T, sources[half : 2 * half] @ (mixing @ rot).T])
trace = rolling_stability(broken, window=252, step=126, seed=0)
drift = trace.frobenius_drift
print(f"\nrolling mixing drift over {len(trace.mixings)} windows "
      f"(rotation planted at observation {half}):")
print("  median drift:", round(float(np.median(drift)), 3))
print("  max drift:   ", round(float(drift.max()), 3),
      f"at window {int(drift.argmax()) + 1}")

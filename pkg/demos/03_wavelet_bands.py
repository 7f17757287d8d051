#!/usr/bin/env python3
"""Wavelet coherence between two series sharing a slow common cycle.

Two noisy series share a period-16 component. Smoothed squared coherence
picks the shared structure up in the 16-32 day band while the fast bands stay
near the noise floor. Also demonstrates why smoothing is mandatory: the raw
pointwise coherence ratio is identically one for ANY pair of series.
"""

import numpy as np

from flowlab.wavelet import BAND_EDGES, coherence, unsmoothed_ratio

rng = np.random.default_rng(3)
t = np.arange(2048)
common = np.sin(2 * np.pi * t / 16.0)
a = common + rng.standard_normal(2048)
b = common + rng.standard_normal(2048)

field = coherence(a, b, smoothing_window=15)
print("band means for a pair sharing a period-16 cycle:")
for k, (lo, hi) in enumerate(BAND_EDGES):
    print(f"  {lo:2d}-{hi:2d} days: {field.band_means[k]:.3f}")

noise = coherence(rng.standard_normal(2048), rng.standard_normal(2048), 15)
print("\nband means for independent noise:")
for k, (lo, hi) in enumerate(BAND_EDGES):
    print(f"  {lo:2d}-{hi:2d} days: {noise.band_means[k]:.3f}")

ratio = unsmoothed_ratio(a, b)
print(f"\nunsmoothed pointwise ratio: min {ratio.min():.12f}, max {ratio.max():.12f}"
      "\n(identically 1, carrying no information; smoothing is what makes"
      "\ncoherence meaningful)")

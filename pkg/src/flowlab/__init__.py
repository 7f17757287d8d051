"""flowlab: investor-flow analysis laboratory.

Normalization of stock-day investor flows, blind source separation, wavelet
coherence, sequence forecasting baselines and long-short backtesting, plus a
synthetic panel generator with planted ground truth for verifying all of it.
"""

__version__ = "0.1.0"

"""Morlet continuous wavelet transform and smoothed wavelet coherence.

The transform uses the analytic Morlet mother (center frequency omega0 = 6) at
the five dyadic scales 2, 4, 8, 16, 32, covering horizons from a couple of
days to about a month and a half of trading time. Squared coherence between
two series is the ratio of the smoothed cross-spectrum magnitude to the
product of smoothed auto-spectra; without smoothing that ratio is identically
one for any pair (a pointwise degeneracy `unsmoothed_ratio` exists to
demonstrate), so smoothing is mandatory here: a moving average over time plus
a 3-point average across adjacent scales. Scale rows 2/4/8 map to the 2-4d,
4-8d and 8-16d bands; rows 16 and 32 together form the 16-32d band.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantSeries, EmptyBand, TooShort

DEFAULT_SCALES = (2, 4, 8, 16, 32)
OMEGA0 = 6.0

# four horizon bands in trading days; value = indices of contributing scales
BAND_EDGES = ((2, 4), (4, 8), (8, 16), (16, 32))
_BAND_OF_SCALE = {2: 0, 4: 1, 8: 2, 16: 3, 32: 3}


@dataclass(frozen=True, eq=False)
class CwtField:
    coefficients: np.ndarray  # complex, (n_scales, T)
    scales: tuple[int, ...]
    omega0: float
    in_cone: np.ndarray  # bool, (n_scales, T); True = boundary-contaminated


@dataclass(frozen=True, eq=False)
class CoherenceField:
    coherence: np.ndarray  # (n_scales, T), values in [0, 1]
    band_means: np.ndarray  # (4,)
    cone_of_influence: np.ndarray  # bool mask, True = contaminated
    scales: tuple[int, ...] = DEFAULT_SCALES


def _morlet_kernel(scale: float, omega0: float) -> np.ndarray:
    """L2-normalized, conjugated and time-reversed Morlet sampled for convolution."""
    half = int(np.ceil(4.0 * scale))
    m = np.arange(-half, half + 1)
    envelope = np.exp(-(m * m) / (2.0 * scale * scale))
    return (np.pi ** -0.25) / np.sqrt(scale) * np.exp(1j * omega0 * m / scale) * envelope


def cone_mask(n_scales_or_scales, t: int) -> np.ndarray:
    """True where a cell is within sqrt(2) * scale of either series edge."""
    scales = n_scales_or_scales
    mask = np.zeros((len(scales), t), dtype=bool)
    idx = np.arange(t)
    for i, s in enumerate(scales):
        width = np.sqrt(2.0) * s
        mask[i] = (idx < width) | (idx > t - 1 - width)
    return mask


def cwt(series, scales: tuple[int, ...] = DEFAULT_SCALES, omega0: float = OMEGA0) -> CwtField:
    """Continuous wavelet transform of a real series at dyadic scales.

    The input is z-scored first (population sd) to stop the tiny magnitudes of
    normalized flows from underflowing downstream products; boundary handling
    is zero padding, with the contaminated cone marked in the result.
    """
    x = np.asarray(series, dtype=float)
    t = len(x)
    if t < 64:
        raise TooShort(f"series length {t} < 64")
    sd = np.std(x)
    if sd == 0:
        raise ConstantSeries("series has zero variance")
    x = (x - np.mean(x)) / sd

    coeffs = np.empty((len(scales), t), dtype=complex)
    for i, s in enumerate(scales):
        kernel = _morlet_kernel(s, omega0)
        full = np.convolve(x, kernel, mode="full")
        start = (len(kernel) - 1) // 2  # center the kernel on each sample
        coeffs[i] = full[start : start + t]
    return CwtField(coeffs, tuple(scales), omega0, cone_mask(scales, t))


def scale_to_period(scale: float, omega0: float = OMEGA0) -> float:
    """Equivalent Fourier period of a Morlet scale."""
    return 4.0 * np.pi * scale / (omega0 + np.sqrt(2.0 + omega0 * omega0))


def _smooth(spec: np.ndarray, window: int) -> np.ndarray:
    """Moving average over time, then 3-point average over adjacent scales."""
    kernel = np.ones(window)
    out = np.empty_like(spec)
    for i in range(spec.shape[0]):
        out[i] = np.convolve(spec[i], kernel, mode="same")
    smoothed = np.empty_like(out)
    n = spec.shape[0]
    for i in range(n):
        lo, hi = max(0, i - 1), min(n, i + 2)
        smoothed[i] = out[lo:hi].mean(axis=0)
    return smoothed


def coherence(a, b, smoothing_window: int = 15) -> CoherenceField:
    """Squared wavelet coherence between two equal-length series.

    Cross- and auto-spectra are smoothed identically (time moving average of
    `smoothing_window`, which must be odd and >= 3, then a 3-point scale
    average) before the ratio is formed, so self-coherence is exactly one and
    every value lies in [0, 1].
    """
    if smoothing_window < 3 or smoothing_window % 2 == 0:
        raise ValueError("smoothing_window must be odd and >= 3")
    xa, xb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if len(xa) != len(xb):
        raise ValueError("series must have equal lengths")

    ca, cb = cwt(xa), cwt(xb)
    wa, wb = ca.coefficients, cb.coefficients
    # cross-spectrum Wa . Wb* assembled from parts; this form makes swapping the
    # inputs negate the imaginary part bit for bit, so coherence is exactly
    # symmetric, and makes self-coherence exactly one
    cross_re = _smooth(wa.real * wb.real + wa.imag * wb.imag, smoothing_window)
    cross_im = _smooth(wa.imag * wb.real - wa.real * wb.imag, smoothing_window)
    sa = _smooth(wa.real * wa.real + wa.imag * wa.imag, smoothing_window)
    sb = _smooth(wb.real * wb.real + wb.imag * wb.imag, smoothing_window)

    denom = sa * sb
    coh = np.zeros_like(sa)
    np.divide(cross_re * cross_re + cross_im * cross_im, denom, out=coh, where=denom > 0)
    coh = np.clip(coh, 0.0, 1.0)

    mask = ca.in_cone
    field = CoherenceField(coh, np.empty(4), mask, ca.scales)
    return CoherenceField(coh, band_summary(field), mask, ca.scales)


def band_summary(field: CoherenceField) -> np.ndarray:
    """Mean coherence per horizon band over cells outside the cone of influence."""
    means = np.empty(4)
    for band in range(4):
        rows = [i for i, s in enumerate(field.scales) if _BAND_OF_SCALE[s] == band]
        cells = field.coherence[rows][~field.cone_of_influence[rows]]
        if cells.size == 0:
            raise EmptyBand(f"band {band} has no cells outside the cone of influence")
        means[band] = cells.mean()
    return means


def unsmoothed_ratio(a, b) -> np.ndarray:
    """The raw pointwise coherence ratio, which is identically 1 for any pair.

    |Wa . Wb*|^2 / (|Wa|^2 |Wb|^2) without any smoothing collapses to 1
    because numerator and denominator factor identically cell by cell; this
    exists so the degeneracy (and hence why smoothing is not optional) can be
    asserted rather than taken on faith.
    """
    ca, cb = cwt(np.asarray(a, dtype=float)), cwt(np.asarray(b, dtype=float))
    wa, wb = ca.coefficients, cb.coefficients
    re = wa.real * wb.real + wa.imag * wb.imag
    im = wa.imag * wb.real - wa.real * wb.imag
    num = re * re + im * im
    denom = (wa.real**2 + wa.imag**2) * (wb.real**2 + wb.imag**2)
    out = np.zeros_like(num)
    np.divide(num, denom, out=out, where=denom > 0)
    return out

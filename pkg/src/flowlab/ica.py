"""Blind source separation of market-level flows.

Whitening plus a symmetric fixed-point FastICA with the log-cosh contrast
(g = tanh) extracts three statistically independent components from the
T x 3 flow matrix. Components are only identified up to permutation and sign,
so alignment against a reference (planted mixing in tests, the previous window
in rolling mode, or an external factor) is part of the module surface, along
with interpretation tables (Pearson correlation of each component against
named factor series) and a rolling-window stability diagnostic that tracks how
much the estimated mixing matrix drifts over time.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from datetime import date as Date
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import InsufficientOverlap, NotConvergedWarning, RankDeficient
from .panel import FlowMatrix


def _as_matrix(flows) -> tuple[np.ndarray, tuple | None]:
    if isinstance(flows, FlowMatrix):
        return np.asarray(flows.values, dtype=float), flows.dates
    return np.asarray(flows, dtype=float), None


@dataclass(frozen=True, eq=False)
class WhiteningTransform:
    mean: np.ndarray  # (3,)
    matrix: np.ndarray  # (3, 3), eigenvalue^(-1/2) scaling after rotation
    eigenvalues: np.ndarray  # (3,), descending

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) @ self.matrix.T

    def inverse_matrix(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


@dataclass(frozen=True, eq=False)
class IcaResult:
    unmixing: np.ndarray  # (3, 3), orthogonal in whitened space
    mixing: np.ndarray  # (3, 3), sources -> observed flows
    components: np.ndarray  # (T, 3), unit sample variance per column
    iterations: int
    converged: bool
    mean: np.ndarray  # (3,), observed-flow mean removed before unmixing

    def reconstruct(self) -> np.ndarray:
        """Observed flows implied by the components: S @ mixing.T + mean."""
        return self.components @ self.mixing.T + self.mean


@dataclass(frozen=True, eq=False)
class FactorCorrelationTable:
    # rows of (component index, factor name, pearson r, two-sided p-value)
    rows: tuple[tuple[int, str, float, float], ...]
    top_factor: tuple[str, ...]  # per component, factor with max |r|

    def lookup(self, component: int, factor: str) -> tuple[float, float]:
        for c, f, r, p in self.rows:
            if c == component and f == factor:
                return r, p
        raise KeyError((component, factor))


@dataclass(frozen=True, eq=False)
class StabilityTrace:
    window_starts: tuple
    mixings: tuple[np.ndarray, ...]  # aligned per-window mixing matrices
    frobenius_drift: np.ndarray  # (n_windows - 1,)
    top_factors: tuple  # per window: tuple of per-component top factor, or None
    converged: tuple[bool, ...]


def whiten(flows) -> tuple[WhiteningTransform, np.ndarray]:
    """Center and rotate flows to zero mean and identity covariance.

    Eigendecomposition of the sample covariance (ddof=1); eigenvalues are
    returned in descending order. Raises RankDeficient when the smallest
    eigenvalue is below 1e-12 of the largest.
    """
    x, _ = _as_matrix(flows)
    if x.shape[0] < 30:
        raise ValueError("whitening needs at least 30 observations")
    mean = x.mean(axis=0)
    cov = np.cov(x - mean, rowvar=False, ddof=1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[-1] < 1e-12 * evals[0]:
        raise RankDeficient(f"covariance eigenvalues {evals} are rank deficient")
    matrix = (evecs / np.sqrt(evals)).T  # rows scaled by eigenvalue^(-1/2)
    transform = WhiteningTransform(mean, matrix, evals)
    return transform, transform.apply(x)


def fastica(
    whitened: np.ndarray,
    max_iter: int = 1000,
    tol: float = 1e-6,
    seed: int = 0,
    whitening: WhiteningTransform | None = None,
) -> IcaResult:
    """Symmetric fixed-point FastICA on whitened data, log-cosh contrast.

    All rows of the unmixing matrix are updated in parallel and re-orthogonalized
    each iteration; convergence is max_i |1 - |<w_new_i, w_old_i>|| < tol.
    If the iteration cap is hit a NotConvergedWarning is emitted and the
    partial result is returned with converged=False, so callers may proceed.
    When `whitening` is given, the mixing matrix is expressed back in the
    original (unwhitened) coordinates.
    """
    z = np.asarray(whitened, dtype=float)
    t, m = z.shape
    rng = np.random.default_rng(seed)
    w, _ = np.linalg.qr(rng.standard_normal((m, m)))

    def sym_decorrelate(mat):
        evals, evecs = np.linalg.eigh(mat @ mat.T)
        return (evecs / np.sqrt(evals)) @ evecs.T @ mat

    w = sym_decorrelate(w)
    converged = False
    iterations = max_iter
    for it in range(1, max_iter + 1):
        y = z @ w.T
        g = np.tanh(y)
        g_prime = 1.0 - g * g
        w_new = (g.T @ z) / t - g_prime.mean(axis=0)[:, None] * w
        w_new = sym_decorrelate(w_new)
        delta = np.max(np.abs(1.0 - np.abs(np.sum(w_new * w, axis=1))))
        w = w_new
        if delta < tol:
            converged = True
            iterations = it
            break
    if not converged:
        warnings.warn(
            f"FastICA hit the iteration cap ({max_iter}) without converging",
            NotConvergedWarning,
        )

    components = z @ w.T
    if whitening is not None:
        mixing = np.linalg.inv(w @ whitening.matrix)
        mean = whitening.mean.copy()
    else:
        mixing = w.T.copy()
        mean = np.zeros(m)
    return IcaResult(w, mixing, components, iterations, converged, mean)


def extract_components(flows, max_iter: int = 1000, tol: float = 1e-6, seed: int = 0) -> IcaResult:
    """whiten followed by fastica, with the mixing in original coordinates."""
    transform, z = whiten(flows)
    return fastica(z, max_iter=max_iter, tol=tol, seed=seed, whitening=transform)


def _similarity_matrix(result: IcaResult, reference) -> np.ndarray:
    """C[i, j]: similarity of recovered component/column i to reference column j."""
    if isinstance(reference, IcaResult):
        reference = reference.mixing
    ref = np.asarray(reference, dtype=float)
    k = result.mixing.shape[1]
    if ref.shape == (k, k):
        a = result.mixing
        c = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                c[i, j] = a[:, i] @ ref[:, j] / (np.linalg.norm(a[:, i]) * np.linalg.norm(ref[:, j]))
        return c
    if ref.ndim != 2 or ref.shape[0] != result.components.shape[0]:
        raise ValueError("reference must be a k x k matrix or a T x k series")
    c = np.empty((k, ref.shape[1]))
    for i in range(k):
        for j in range(ref.shape[1]):
            c[i, j] = np.corrcoef(result.components[:, i], ref[:, j])[0, 1]
    return c


def align_components(result: IcaResult, reference) -> IcaResult:
    """Resolve permutation and sign ambiguity against a reference.

    `reference` is a planted mixing matrix (3x3), another IcaResult, or a
    T x 3 series of reference sources. Components are permuted to maximize the
    total |similarity| over all assignments (brute force over the 6
    permutations) and sign-flipped so each matched similarity is non-negative.
    """
    c = _similarity_matrix(result, reference)
    k = c.shape[0]
    best_perm, best_score = None, -np.inf
    for perm in itertools.permutations(range(k)):
        score = sum(abs(c[perm[j], j]) for j in range(k))
        if score > best_score:
            best_score, best_perm = score, perm
    signs = np.array([1.0 if c[best_perm[j], j] >= 0 else -1.0 for j in range(k)])

    perm = list(best_perm)
    components = result.components[:, perm] * signs
    unmixing = result.unmixing[perm, :] * signs[:, None]
    mixing = result.mixing[:, perm] * signs
    return IcaResult(unmixing, mixing, components, result.iterations, result.converged, result.mean)


def interpret(
    components: np.ndarray,
    dates: Sequence[Date],
    factors: Mapping[str, tuple[Sequence[Date], np.ndarray]],
    min_overlap: int = 30,
) -> FactorCorrelationTable:
    """Pearson correlation of each component against each named factor series.

    Factor series are inner-joined on date; fewer than `min_overlap`
    overlapping observations raises InsufficientOverlap. p-values use the
    t approximation t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom.
    """
    comps = np.asarray(components, dtype=float)
    date_index = {d: i for i, d in enumerate(dates)}
    rows = []
    for name, (fdates, fvalues) in factors.items():
        fvalues = np.asarray(fvalues, dtype=float)
        pairs = [(date_index[d], k) for k, d in enumerate(fdates) if d in date_index]
        if len(pairs) < min_overlap:
            raise InsufficientOverlap(
                f"factor {name!r} overlaps components on {len(pairs)} dates (< {min_overlap})"
            )
        ci = np.array([p[0] for p in pairs])
        fi = np.array([p[1] for p in pairs])
        n = len(pairs)
        for j in range(comps.shape[1]):
            r = float(np.corrcoef(comps[ci, j], fvalues[fi])[0, 1])
            if abs(r) >= 1.0:
                p = 0.0
            else:
                tstat = abs(r) * np.sqrt((n - 2) / (1.0 - r * r))
                p = float(2.0 * stats.t.sf(tstat, n - 2))
            rows.append((j, name, r, p))

    top = []
    for j in range(comps.shape[1]):
        mine = [(abs(r), name) for (c, name, r, _) in rows if c == j]
        top.append(max(mine)[1])
    return FactorCorrelationTable(tuple(rows), tuple(top))


def rolling_stability(
    flows,
    window: int = 252,
    step: int = 21,
    factors: Mapping[str, tuple[Sequence[Date], np.ndarray]] | None = None,
    seed: int = 0,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> StabilityTrace:
    """Re-estimate the mixing on rolling windows and track its Frobenius drift.

    Each window is whitened and unmixed independently (same seed, so the
    fixed-point starts identically), then aligned to the previous window's
    aligned mixing; the drift series is ||A(k) - A(k-1)||_F between
    consecutive aligned mixings. Non-convergence inside a window is recorded,
    not fatal. The first window has no drift entry.
    """
    x, dates = _as_matrix(flows)
    t = x.shape[0]
    if t < window + step:
        raise ValueError(f"need at least window + step = {window + step} rows, got {t}")

    starts = list(range(0, t - window + 1, step))
    mixings, tops, convs, window_starts = [], [], [], []
    prev = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConvergedWarning)
        for s in starts:
            sub = x[s : s + window]
            transform, z = whiten(sub)
            result = fastica(z, max_iter=max_iter, tol=tol, seed=seed, whitening=transform)
            if prev is not None:
                result = align_components(result, prev)
            prev = result.mixing
            mixings.append(result.mixing)
            convs.append(result.converged)
            window_starts.append(dates[s] if dates is not None else s)
            if factors is not None and dates is not None:
                table = interpret(result.components, dates[s : s + window], factors)
                tops.append(table.top_factor)
            else:
                tops.append(None)

    drift = np.array(
        [np.linalg.norm(mixings[k] - mixings[k - 1]) for k in range(1, len(mixings))]
    )
    return StabilityTrace(tuple(window_starts), tuple(mixings), drift, tuple(tops), tuple(convs))


def amari_distance(a_est: np.ndarray, a_true: np.ndarray) -> float:
    """Permutation- and scale-invariant recovery score between mixing matrices.

    Zero when a_est equals a_true up to column permutation and scaling, 1 at
    the opposite extreme. Computed from P = pinv(a_est) @ a_true as the usual
    normalized row and column cross-talk sum.
    """
    p = np.abs(np.linalg.pinv(a_est) @ np.asarray(a_true, dtype=float))
    n = p.shape[0]
    row = (p.sum(axis=1) / p.max(axis=1) - 1.0).sum()
    col = (p.sum(axis=0) / p.max(axis=0) - 1.0).sum()
    return float((row + col) / (2.0 * n * (n - 1)))

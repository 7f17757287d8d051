"""Ridge and LASSO baselines on flattened flow windows.

Both fit on internally standardized features with an unpenalized intercept.
Ridge solves (X'X + lambda I) b = X'y in closed form; LASSO runs cyclic
coordinate descent on the objective (1/2n)||y - Xb||^2 + lambda ||b||_1, whose
null threshold is lambda_max = max|X'y|/n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NotConverged, SingularSystem


@dataclass(frozen=True, eq=False)
class LinearModel:
    coef: np.ndarray  # coefficients on standardized features
    intercept: float
    feature_means: np.ndarray
    feature_sds: np.ndarray
    lam: float
    kind: str  # "ridge" or "lasso"

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 3:
            x = x.reshape(len(x), -1)
        xs = (x - self.feature_means) / self.feature_sds
        return xs @ self.coef + self.intercept


def _standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    return (x - mu) / sd, mu, sd


def _flatten(features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 3:
        x = x.reshape(len(x), -1)
    if not np.all(np.isfinite(x)):
        raise ValueError("design matrix contains non-finite values")
    return x


def ridge_fit(features, targets, lam: float) -> LinearModel:
    """Closed-form L2-regularized least squares; lam = 0 is plain OLS."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    x = _flatten(features)
    y = np.asarray(targets, dtype=float)
    xs, mu, sd = _standardize(x)
    ybar = y.mean()
    gram = xs.T @ xs
    p = gram.shape[0]
    if lam == 0 and np.linalg.matrix_rank(gram) < p:
        raise SingularSystem("X'X is singular and lambda is 0")
    coef = np.linalg.solve(gram + lam * np.eye(p), xs.T @ (y - ybar))
    return LinearModel(coef, float(ybar), mu, sd, float(lam), "ridge")


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def lasso_fit(
    features, targets, lam: float, max_sweeps: int = 10_000, tol: float = 1e-8
) -> LinearModel:
    """Cyclic coordinate descent for the L1-penalized linear model.

    Converges when the largest coefficient change in a full sweep drops below
    `tol`; raises NotConverged after `max_sweeps` sweeps. With lam at or above
    max|X'y|/n every coefficient is zero.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    x = _flatten(features)
    y = np.asarray(targets, dtype=float)
    n = len(y)
    xs, mu, sd = _standardize(x)
    ybar = y.mean()
    yc = y - ybar

    col_sq = (xs * xs).sum(axis=0) / n
    beta = np.zeros(xs.shape[1])
    resid = yc.copy()
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(len(beta)):
            if col_sq[j] == 0:
                continue
            rho = xs[:, j] @ resid / n + col_sq[j] * beta[j]
            new = _soft_threshold(rho, lam) / col_sq[j]
            if new != beta[j]:
                resid += xs[:, j] * (beta[j] - new)
                max_delta = max(max_delta, abs(new - beta[j]))
                beta[j] = new
        if max_delta < tol:
            return LinearModel(beta, float(ybar), mu, sd, float(lam), "lasso")
    raise NotConverged(max_sweeps, max_delta)

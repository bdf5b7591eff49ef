"""Multivariate normal parameters under missing data.

em_mvn maximizes the observed-data likelihood of theta = (mu, sigma) by
expectation-maximization: the E-step fills per-row conditional means and
adds conditional covariances to the second moments, the M-step
re-estimates mu and sigma with the MLE (denominator n). Rows are
grouped by missingness pattern so each distinct observed block is
factorized once per iteration.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ..errors import (
    DegenerateSigmaError,
    NoConvergenceError,
    SingularObservedBlockError,
    TooFewObservedError,
)

_LOG_2PI = math.log(2.0 * math.pi)
_PSD_TOL = -1e-8


@dataclass
class MvnParams:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        p = self.mu.shape[0]
        if self.sigma.shape != (p, p):
            raise ValueError(f"sigma must be {p}x{p}")
        if np.abs(self.sigma - self.sigma.T).max(initial=0.0) > 1e-10:
            raise ValueError("sigma is not symmetric within 1e-10")


@dataclass
class EmFit:
    params: MvnParams
    iterations: int
    converged: bool
    loglik_trace: list = field(default_factory=list)


def _clip_psd(sigma: np.ndarray) -> np.ndarray:
    """Zero out slightly negative eigenvalues; reject anything worse."""
    sigma = 0.5 * (sigma + sigma.T)
    vals, vecs = np.linalg.eigh(sigma)
    scale = max(1.0, float(vals.max(initial=1.0)))
    if vals.min() < _PSD_TOL * scale:
        raise DegenerateSigmaError(
            f"covariance lost positive semi-definiteness (min eigenvalue {vals.min():.3e})"
        )
    if vals.min() < 0.0:
        vals = np.clip(vals, 0.0, None)
        sigma = (vecs * vals) @ vecs.T
        sigma = 0.5 * (sigma + sigma.T)
    return sigma


def _chol_observed(sigma_oo: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(sigma_oo)
    except np.linalg.LinAlgError:
        # PSD-singular blocks: nudge the diagonal once before giving up
        jitter = 1e-10 * max(1.0, float(np.trace(sigma_oo)) / sigma_oo.shape[0])
        try:
            return np.linalg.cholesky(sigma_oo + jitter * np.eye(sigma_oo.shape[0]))
        except np.linalg.LinAlgError:
            raise SingularObservedBlockError(
                "observed-block covariance is singular"
            ) from None


def conditional_map(theta: MvnParams, observed_idx, missing_idx):
    """Affine map behind the Schur-complement conditional.

    Returns (coef, offset, sigma_cond) with
    mu_cond(x_obs) = offset + coef @ x_obs; an empty observed set yields
    the marginal (coef has zero columns).
    """
    obs = np.asarray(observed_idx, dtype=np.intp)
    mis = np.asarray(missing_idx, dtype=np.intp)
    p = theta.mu.shape[0]
    union = np.concatenate([obs, mis])
    if np.unique(union).size != union.size:
        raise ValueError("observed and missing index sets must be disjoint")
    if union.size and (union.min() < 0 or union.max() >= p):
        raise ValueError("indices out of range")
    if mis.size == 0:
        return np.empty((0, obs.size)), np.empty(0), np.empty((0, 0))
    if obs.size == 0:
        return (
            np.empty((mis.size, 0)),
            theta.mu[mis].copy(),
            theta.sigma[np.ix_(mis, mis)].copy(),
        )
    sigma = _clip_psd(theta.sigma)
    s_oo = sigma[np.ix_(obs, obs)]
    s_mo = sigma[np.ix_(mis, obs)]
    s_mm = sigma[np.ix_(mis, mis)]
    chol = _chol_observed(s_oo)
    # coef = S_mo S_oo^-1 via two triangular solves
    half = np.linalg.solve(chol, s_mo.T)
    coef = np.linalg.solve(chol.T, half).T
    offset = theta.mu[mis] - coef @ theta.mu[obs]
    sigma_cond = s_mm - coef @ s_mo.T
    sigma_cond = 0.5 * (sigma_cond + sigma_cond.T)
    return coef, offset, sigma_cond


def conditional_normal(theta: MvnParams, observed_idx, observed_values, missing_idx):
    """Schur-complement conditional (mu, sigma) of the missing block.

    Empty observed set returns the marginal; empty missing set returns
    empty arrays.
    """
    obs = np.asarray(observed_idx, dtype=np.intp)
    x_obs = np.asarray(observed_values, dtype=np.float64)
    if x_obs.shape != (obs.size,):
        raise ValueError("observed values must align with observed indices")
    coef, offset, sigma_cond = conditional_map(theta, observed_idx, missing_idx)
    if sigma_cond.shape[0] == 0:
        return np.empty(0), np.empty((0, 0))
    return offset + coef @ x_obs, sigma_cond


def _group_patterns(mask: np.ndarray):
    """Row indices grouped by identical missingness pattern."""
    n, p = mask.shape
    weights = 1 << np.arange(p, dtype=np.uint64)
    keys = (mask.astype(np.uint64) @ weights) if p <= 63 else None
    if keys is None:
        keys = np.array([hash(row.tobytes()) for row in mask])
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    boundaries = np.flatnonzero(np.diff(sorted_keys)) + 1
    groups = np.split(order, boundaries)
    return [(mask[g[0]], g) for g in groups]


def em_mvn(data: Dataset, tol: float = 1e-6, max_iter: int = 500) -> EmFit:
    """Fit theta = (mu, sigma) by EM; observed-data log-likelihood is
    non-decreasing across iterations (checked each step).

    On complete data the initializer is already the MLE, so the first
    iteration reproduces it exactly and converges immediately. Raises
    NoConvergenceError (carrying the last iterate) at the iteration cap.
    """
    values, mask = data.values, data.mask
    n, p = values.shape
    for j in range(p):
        if (~mask[:, j]).sum() < 2:
            raise TooFewObservedError(data.column_names[j])

    filled = values.copy()
    col_means = np.array([values[~mask[:, j], j].mean() for j in range(p)])
    for j in range(p):
        filled[mask[:, j], j] = col_means[j]
    mu = col_means.copy()
    sigma = _clip_psd(np.cov(filled, rowvar=False, ddof=0).reshape(p, p))
    if n <= p:
        # shrink toward the diagonal so the starting sigma is invertible
        sigma += 1e-6 * max(1.0, float(np.trace(sigma)) / p) * np.eye(p)

    patterns = _group_patterns(mask)
    trace = []
    prev_ll = -np.inf
    for iteration in range(1, max_iter + 1):
        s1 = np.zeros(p)
        s2 = np.zeros((p, p))
        ll = 0.0
        for pat, rows in patterns:
            obs = np.flatnonzero(~pat)
            mis = np.flatnonzero(pat)
            m = rows.size
            if obs.size == 0:
                s1 += m * mu
                s2 += m * (sigma + np.outer(mu, mu))
                continue
            x_obs = values[np.ix_(rows, obs)]
            chol = _chol_observed(sigma[np.ix_(obs, obs)])
            centered = x_obs - mu[obs]
            z = np.linalg.solve(chol, centered.T)
            logdet = 2.0 * np.log(np.diag(chol)).sum()
            ll += -0.5 * (m * (obs.size * _LOG_2PI + logdet) + (z * z).sum())
            s1[obs] += x_obs.sum(axis=0)
            s2[np.ix_(obs, obs)] += x_obs.T @ x_obs
            if mis.size:
                s_mo = sigma[np.ix_(mis, obs)]
                a_mat = np.linalg.solve(chol.T, np.linalg.solve(chol, s_mo.T)).T
                mu_cond = mu[mis] + centered @ a_mat.T
                cov_cond = sigma[np.ix_(mis, mis)] - a_mat @ s_mo.T
                s1[mis] += mu_cond.sum(axis=0)
                cross = x_obs.T @ mu_cond
                s2[np.ix_(obs, mis)] += cross
                s2[np.ix_(mis, obs)] += cross.T
                s2[np.ix_(mis, mis)] += mu_cond.T @ mu_cond + m * cov_cond

        mu_new = s1 / n
        sigma_new = _clip_psd(s2 / n - np.outer(mu_new, mu_new))

        if ll < prev_ll - 1e-8 * max(1.0, abs(prev_ll)):
            raise AssertionError(
                f"observed-data log-likelihood decreased: {prev_ll} -> {ll}"
            )
        trace.append(ll)
        prev_ll = ll

        delta = max(
            np.abs(mu_new - mu).max(initial=0.0),
            np.abs(sigma_new - sigma).max(initial=0.0),
        )
        mu, sigma = mu_new, sigma_new
        if delta < tol:
            return EmFit(MvnParams(mu, sigma), iteration, True, trace)

    raise NoConvergenceError(max_iter, params=MvnParams(mu, sigma))

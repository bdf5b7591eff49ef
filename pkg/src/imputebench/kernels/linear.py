"""Least-squares and ridge regression with an intercept."""

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatchError, SingularDesignError, TooFewRowsError


@dataclass
class LinearModel:
    coefficients: np.ndarray  # intercept first, then one weight per predictor
    residual_sd: float
    ridge_penalty: float


def fit_linear(X, y, ridge_penalty: float = 0.0) -> LinearModel:
    """Minimize ||y - [1 X] beta||^2 (+ penalty * ||beta_slopes||^2).

    Solved through a QR/SVD least-squares path rather than normal
    equations; the ridge penalty never touches the intercept. Residual
    sd uses the n - p - 1 denominator.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise DimensionMismatchError(f"X has {n} rows but y has {y.shape}")
    if n - p - 1 <= 0:
        raise TooFewRowsError(f"{n} rows cannot identify {p} predictors plus intercept")
    A = np.column_stack([np.ones(n), X])
    if ridge_penalty < 0.0:
        raise ValueError("ridge penalty must be >= 0")
    if ridge_penalty == 0.0:
        beta, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        if rank < p + 1:
            raise SingularDesignError(
                f"design matrix rank {rank} < {p + 1}; exactly collinear predictors"
            )
    else:
        aug = np.zeros((p, p + 1))
        aug[:, 1:] = np.sqrt(ridge_penalty) * np.eye(p)
        beta, _, _, _ = np.linalg.lstsq(
            np.vstack([A, aug]), np.concatenate([y, np.zeros(p)]), rcond=None
        )
    resid = y - A @ beta
    residual_sd = float(np.sqrt((resid @ resid) / (n - p - 1)))
    return LinearModel(beta, residual_sd, float(ridge_penalty))


def predict_linear(model: LinearModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.coefficients.shape[0] - 1:
        raise DimensionMismatchError(
            f"model has {model.coefficients.shape[0] - 1} predictors, X has {X.shape[1]}"
        )
    return model.coefficients[0] + X @ model.coefficients[1:]

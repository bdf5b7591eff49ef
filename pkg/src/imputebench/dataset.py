"""Column-named numeric matrix with a missing mask.

The (values, mask) pair is the single currency of every operation in
the package. Cells flagged missing hold a sentinel (conventionally NaN)
that no numeric kernel ever reads; kernels always consult the mask.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyResultError,
    TooFewObservedError,
    ZeroVarianceError,
)


@dataclass
class Dataset:
    """n x p matrix of 64-bit reals plus a boolean missing mask (True = missing)."""

    column_names: list[str]
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DimensionMismatchError("values must be a 2-d matrix")
        if self.mask is None:
            self.mask = np.zeros(self.values.shape, dtype=bool)
        self.mask = np.ascontiguousarray(self.mask, dtype=bool)
        n, p = self.values.shape
        if n < 1 or p < 1:
            raise DimensionMismatchError("dataset needs at least one row and one column")
        if self.mask.shape != self.values.shape:
            raise DimensionMismatchError(
                f"mask shape {self.mask.shape} != values shape {self.values.shape}"
            )
        if len(self.column_names) != p:
            raise DimensionMismatchError(
                f"{len(self.column_names)} column names for {p} columns"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def is_complete(self) -> bool:
        return not self.mask.any()

    def missing_fraction(self, column: int) -> float:
        return float(self.mask[:, column].mean())

    def observed(self, column: int) -> np.ndarray:
        """Observed values of one column, in row order."""
        return self.values[~self.mask[:, column], column]

    def copy(self) -> "Dataset":
        return Dataset(list(self.column_names), self.values.copy(), self.mask.copy())


@dataclass
class StandardizationParams:
    """Per-column mean and sample sd (n-1 denominator) over observed cells only."""

    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.sds = np.asarray(self.sds, dtype=np.float64)
        if self.means.shape != self.sds.shape or self.means.ndim != 1:
            raise DimensionMismatchError("means and sds must be equal-length vectors")


def observed_column_stats(data: Dataset) -> StandardizationParams:
    """Per-column mean/sd ignoring masked cells.

    Raises TooFewObservedError for columns with fewer than two observed
    cells and ZeroVarianceError for columns whose observed values are
    constant; such columns cannot be standardized and abort the caller.
    """
    p = data.n_cols
    means = np.empty(p)
    sds = np.empty(p)
    for j in range(p):
        obs = data.observed(j)
        if obs.size < 2:
            raise TooFewObservedError(data.column_names[j])
        means[j] = obs.mean()
        sd = obs.std(ddof=1)
        if sd <= 0.0:
            raise ZeroVarianceError(data.column_names[j])
        sds[j] = sd
    return StandardizationParams(means, sds)


def _check_params(data: Dataset, params: StandardizationParams):
    if params.means.shape[0] != data.n_cols:
        raise DimensionMismatchError(
            f"params cover {params.means.shape[0]} columns, data has {data.n_cols}"
        )


def standardize(data: Dataset, params: StandardizationParams) -> Dataset:
    """Map observed cell (i,j) to (x - mean_j) / sd_j; masked cells stay masked."""
    _check_params(data, params)
    out = (data.values - params.means) / params.sds
    out[data.mask] = np.nan
    return Dataset(list(data.column_names), out, data.mask.copy())


def unstandardize(data: Dataset, params: StandardizationParams) -> Dataset:
    """Exact inverse of standardize on observed cells."""
    _check_params(data, params)
    out = data.values * params.sds + params.means
    out[data.mask] = np.nan
    return Dataset(list(data.column_names), out, data.mask.copy())


def complete_rows(data: Dataset) -> Dataset:
    """Rows with zero masked cells, order preserved."""
    keep = ~data.mask.any(axis=1)
    if not keep.any():
        raise EmptyResultError("no complete rows")
    return Dataset(list(data.column_names), data.values[keep], data.mask[keep])

"""MCAR amputation, a MAR negative control, and the pairwise Welch
diagnostic that checks MCAR behavior on a dummy missingness indicator."""

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import AlreadyMissingError, PercentOutOfRangeError, ZeroVarianceError
from .kernels.stats_tests import welch_t_test

POLICY_EXACT = "exact"
POLICY_BERNOULLI = "bernoulli"


@dataclass
class AmputationPlan:
    percentage: float
    policy: str = POLICY_EXACT
    seed: int = 0

    def __post_init__(self):
        if self.policy not in (POLICY_EXACT, POLICY_BERNOULLI):
            raise ValueError(f"unknown policy {self.policy!r}")
        if not 0.0 <= self.percentage <= 1.0:
            raise PercentOutOfRangeError(
                f"percentage {self.percentage} outside [0, 1]"
            )


def ampute_mcar(data: Dataset, plan: AmputationPlan) -> Dataset:
    """Delete cells column by column, independently of all data values.

    Exact policy removes exactly round(percentage * n) cells per column;
    bernoulli removes each cell independently with that probability.
    The input must be complete; callers keep it for scoring.
    """
    if not data.is_complete():
        raise AlreadyMissingError("input dataset already has missing cells")
    n, p = data.values.shape
    mask = np.zeros((n, p), dtype=bool)
    rng = np.random.default_rng(plan.seed)
    if plan.policy == POLICY_EXACT:
        k = int(round(plan.percentage * n))
        for j in range(p):
            mask[rng.choice(n, size=k, replace=False), j] = True
    else:
        mask = rng.random((n, p)) < plan.percentage
    out = data.values.copy()
    out[mask] = np.nan
    return Dataset(list(data.column_names), out, mask)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def ampute_mar_control(
    data: Dataset,
    driver_column: int,
    percentage: float,
    seed: int,
    slope: float = 2.0,
) -> Dataset:
    """Missing-at-random negative control for the MCAR diagnostic.

    Cells of every column except the driver go missing with probability
    sigmoid(intercept + slope * z), z the standardized driver value. The
    intercept is calibrated by bisection so the expected deletion rate
    equals `percentage`; slope 0 reduces to Bernoulli MCAR.
    """
    if not data.is_complete():
        raise AlreadyMissingError("input dataset already has missing cells")
    if not 0.0 <= percentage <= 1.0:
        raise PercentOutOfRangeError(f"percentage {percentage} outside [0, 1]")
    n, p = data.values.shape
    driver = data.values[:, driver_column]
    sd = driver.std(ddof=1)
    if sd <= 0.0:
        raise ZeroVarianceError(data.column_names[driver_column])
    z = (driver - driver.mean()) / sd

    mask = np.zeros((n, p), dtype=bool)
    if percentage > 0.0:
        if percentage >= 1.0:
            prob = np.ones(n)
        else:
            lo, hi = -40.0, 40.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if _sigmoid(mid + slope * z).mean() < percentage:
                    lo = mid
                else:
                    hi = mid
            prob = _sigmoid(0.5 * (lo + hi) + slope * z)
        rng = np.random.default_rng(seed)
        for j in range(p):
            if j == driver_column:
                continue
            mask[:, j] = rng.random(n) < prob
    out = data.values.copy()
    out[mask] = np.nan
    return Dataset(list(data.column_names), out, mask)


@dataclass
class PairResult:
    indicator_column: int
    value_column: int
    t_statistic: float
    df: float
    p_value: float


@dataclass
class McarDiagnosticReport:
    pair_results: list = field(default_factory=list)
    rejected_pairs: int = 0
    bonferroni_rejected_pairs: int = 0
    skipped_pairs: int = 0
    alpha: float = 0.05

    @property
    def tested_pairs(self) -> int:
        return len(self.pair_results)


def mcar_diagnostic(data: Dataset, alpha: float = 0.05) -> McarDiagnosticReport:
    """Welch battery over ordered column pairs.

    For each pair (i, j), i != j, column i's missingness indicator
    splits column j's observed values into two groups; group sizes below
    2 make the pair ineligible (skipped and counted). Rejections are
    reported both at raw alpha and Bonferroni-corrected.
    """
    n, p = data.values.shape
    report = McarDiagnosticReport(alpha=alpha)
    results = []
    for i in range(p):
        ind = data.mask[:, i]
        for j in range(p):
            if j == i:
                continue
            observed_j = ~data.mask[:, j]
            grp_missing = data.values[ind & observed_j, j]
            grp_observed = data.values[~ind & observed_j, j]
            if grp_missing.size < 2 or grp_observed.size < 2:
                report.skipped_pairs += 1
                continue
            try:
                res = welch_t_test(grp_missing, grp_observed)
            except ValueError:
                report.skipped_pairs += 1
                continue
            results.append(
                PairResult(i, j, res.statistic, res.df[0], res.p_value)
            )
    report.pair_results = results
    if results:
        bonf = alpha / len(results)
        report.rejected_pairs = sum(r.p_value < alpha for r in results)
        report.bonferroni_rejected_pairs = sum(r.p_value < bonf for r in results)
    return report

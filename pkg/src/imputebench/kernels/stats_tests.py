"""Welch's two-sample t-test and one-way ANOVA."""

from dataclasses import dataclass

import numpy as np

from ..errors import ZeroWithinVarianceError
from .distributions import f_sf, student_t_sf_two_sided


@dataclass
class TestResult:
    statistic: float
    df: tuple
    p_value: float
    degenerate: bool = False

    def __post_init__(self):
        self.df = tuple(float(d) for d in np.atleast_1d(self.df))


def welch_t_test(a, b) -> TestResult:
    """Two-sided Welch test: unequal variances, Welch-Satterthwaite df.

    Two identical constant samples carry no location evidence; by
    convention that case returns t=0, p=1 with the degenerate flag set.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise ValueError("each sample needs at least 2 values")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        if a[0] == b[0]:
            return TestResult(0.0, (float(na + nb - 2),), 1.0, degenerate=True)
        raise ValueError("both samples constant with different values")
    sa = va / na
    sb = vb / nb
    t = (a.mean() - b.mean()) / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (na - 1) + sb**2 / (nb - 1))
    p = student_t_sf_two_sided(float(t), float(df))
    return TestResult(float(t), (float(df),), p)


def anova_oneway(groups) -> TestResult:
    """One-way fixed-effects ANOVA over k groups; F = MS_between / MS_within."""
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(arrays) < 2:
        raise ValueError("need at least 2 groups")
    if any(g.size < 2 for g in arrays):
        raise ValueError("each group needs at least 2 values")
    n_total = sum(g.size for g in arrays)
    grand = sum(g.sum() for g in arrays) / n_total
    ss_between = sum(g.size * (g.mean() - grand) ** 2 for g in arrays)
    ss_within = sum(((g - g.mean()) ** 2).sum() for g in arrays)
    df1 = len(arrays) - 1
    df2 = n_total - len(arrays)
    if ss_within <= 0.0:
        raise ZeroWithinVarianceError("total within-group variance is zero")
    f = (ss_between / df1) / (ss_within / df2)
    return TestResult(float(f), (float(df1), float(df2)), f_sf(float(f), df1, df2))

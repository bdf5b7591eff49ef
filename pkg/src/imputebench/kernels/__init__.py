from .distributions import betainc_regularized, f_sf, student_t_sf_two_sided
from .linear import LinearModel, fit_linear, predict_linear
from .mvn import EmFit, MvnParams, conditional_normal, em_mvn
from .forest import Forest, Tree, fit_forest, predict_forest
from .pmm import pmm_match, pmm_match_many
from .sampling import bootstrap_sample
from .stats_tests import TestResult, anova_oneway, welch_t_test

__all__ = [
    "betainc_regularized",
    "student_t_sf_two_sided",
    "f_sf",
    "LinearModel",
    "fit_linear",
    "predict_linear",
    "MvnParams",
    "EmFit",
    "em_mvn",
    "conditional_normal",
    "Forest",
    "Tree",
    "fit_forest",
    "predict_forest",
    "pmm_match",
    "pmm_match_many",
    "bootstrap_sample",
    "TestResult",
    "welch_t_test",
    "anova_oneway",
]

"""The six imputation strategies behind one interface.

Every imputer takes a Dataset plus a seed, returns an ImputationResult
whose completed dataset agrees bit-for-bit with the input at observed
cells, carries no mask, and holds only finite values. All strategies
operate on whatever scale the caller provides; the benchmark harness
feeds them standardized data.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import (
    AllMissingColumnError,
    NoConvergenceError,
    SingularDesignError,
    TooFewRowsError,
    UsageError,
    ZeroVarianceError,
)
from .kernels.forest import fit_forest, predict_forest
from .kernels.linear import fit_linear, predict_linear
from .kernels.mvn import conditional_map, em_mvn
from .kernels.pmm import pmm_match_many
from .kernels.sampling import bootstrap_sample
from .seeds import stable_seed

METHODS = ("mean", "mice", "mi", "amelia", "hmisc", "missforest")

_KNOWN_OPTIONS = {
    "mean": frozenset(),
    "mice": frozenset({"cycles"}),
    "mi": frozenset({"cycles", "chains"}),
    "amelia": frozenset({"m", "tol", "max_iter", "noise"}),
    "hmisc": frozenset({"iterations", "burn_in", "k"}),
    "missforest": frozenset({"tree_count", "max_iter", "min_leaf"}),
}

_INT_OPTIONS = {
    "cycles", "chains", "m", "max_iter", "iterations", "burn_in", "k",
    "tree_count", "min_leaf",
}


@dataclass
class ImputerSpec:
    method: str
    options: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise UsageError(
                f"unknown method {self.method!r}; choose from {', '.join(METHODS)}"
            )
        known = _KNOWN_OPTIONS[self.method]
        clean = {}
        for key, value in self.options.items():
            if key not in known:
                raise UsageError(f"method {self.method!r} has no option {key!r}")
            if key == "noise":
                if isinstance(value, str):
                    token = value.strip().lower()
                    if token in ("on", "true", "1", "yes"):
                        value = True
                    elif token in ("off", "false", "0", "no"):
                        value = False
                    else:
                        raise UsageError(f"noise must be on/off, got {value!r}")
                clean[key] = bool(value)
            elif key == "tol":
                clean[key] = float(value)
                if clean[key] <= 0:
                    raise UsageError("tol must be positive")
            else:
                clean[key] = int(value)
                if key in _INT_OPTIONS and clean[key] < 1 and key != "burn_in":
                    raise UsageError(f"option {key!r} must be >= 1")
                if key == "burn_in" and clean[key] < 0:
                    raise UsageError("burn_in must be >= 0")
        self.options = clean


@dataclass
class ImputationResult:
    completed: Dataset
    diagnostics: dict
    method: str


def _check_columns_have_observations(data: Dataset):
    for j in range(data.n_cols):
        if data.mask[:, j].all():
            raise AllMissingColumnError(data.column_names[j])


def _column_means(data: Dataset) -> np.ndarray:
    _check_columns_have_observations(data)
    means = np.empty(data.n_cols)
    for j in range(data.n_cols):
        means[j] = data.observed(j).mean()
    return means


def _visit_order(mask: np.ndarray) -> np.ndarray:
    """Columns with missing cells, ascending by missing count (stable)."""
    counts = mask.sum(axis=0)
    order = np.argsort(counts, kind="stable")
    return order[counts[order] > 0]


def _finish(data: Dataset, working: np.ndarray, diagnostics: dict,
            method: str) -> ImputationResult:
    completed_values = data.values.copy()
    completed_values[data.mask] = working[data.mask]
    if not np.isfinite(completed_values).all():
        raise AssertionError(f"{method} produced non-finite imputed values")
    completed = Dataset(
        list(data.column_names),
        completed_values,
        np.zeros_like(data.mask),
    )
    return ImputationResult(completed, diagnostics, method)


def _fit_with_ridge_retry(X, y, forced_penalty=0.0):
    """Ridge fallback when the design is exactly collinear."""
    if forced_penalty > 0.0:
        return fit_linear(X, y, forced_penalty)
    try:
        return fit_linear(X, y, 0.0)
    except SingularDesignError:
        penalty = 1e-6 * float(np.trace(X.T @ X)) / max(1, X.shape[1])
        if penalty <= 0.0:
            penalty = 1e-6
        return fit_linear(X, y, penalty)


# --- mean -----------------------------------------------------------------

def impute_mean(data: Dataset, seed: int = 0) -> ImputationResult:
    """Replace each masked cell with its column's observed mean."""
    means = _column_means(data)
    working = data.values.copy()
    for j in range(data.n_cols):
        working[data.mask[:, j], j] = means[j]
    return _finish(data, working, {"column_means": means.tolist()}, "mean")


# --- mice -----------------------------------------------------------------

def impute_mice(data: Dataset, cycles: int = 10, seed: int = 0) -> ImputationResult:
    """Chained equations with deterministic regression predictions.

    Masked cells start at column means; each cycle revisits every
    incomplete column (ascending missing count), regresses its observed
    values on all other columns' current working values, and overwrites
    its masked cells with model predictions.
    """
    means = _column_means(data)
    working = data.values.copy()
    for j in range(data.n_cols):
        working[data.mask[:, j], j] = means[j]
    order = _visit_order(data.mask)
    max_changes = []
    for _ in range(cycles):
        max_change = 0.0
        for v in order:
            obs = ~data.mask[:, v]
            predictors = np.delete(np.arange(data.n_cols), v)
            model = _fit_with_ridge_retry(working[np.ix_(obs, predictors)],
                                          working[obs, v])
            miss = data.mask[:, v]
            preds = predict_linear(model, working[np.ix_(miss, predictors)])
            if preds.size:
                max_change = max(max_change,
                                 float(np.abs(preds - working[miss, v]).max()))
            working[miss, v] = preds
        max_changes.append(max_change)
    return _finish(data, working,
                   {"cycles": cycles, "max_change_per_cycle": max_changes}, "mice")


# --- mi -------------------------------------------------------------------

def _pairwise_correlation(data: Dataset) -> np.ndarray:
    """Correlations over jointly observed cells, NaN when undefined."""
    p = data.n_cols
    corr = np.eye(p)
    for a in range(p):
        for b in range(a + 1, p):
            both = ~data.mask[:, a] & ~data.mask[:, b]
            if both.sum() < 3:
                corr[a, b] = corr[b, a] = np.nan
                continue
            xa = data.values[both, a]
            xb = data.values[both, b]
            sa, sb = xa.std(), xb.std()
            if sa == 0.0 or sb == 0.0:
                corr[a, b] = corr[b, a] = np.nan
                continue
            r = float(np.mean((xa - xa.mean()) * (xb - xb.mean())) / (sa * sb))
            corr[a, b] = corr[b, a] = r
    return corr


def _psrf(chain_series: np.ndarray) -> float:
    """Potential scale reduction over (chains, cycles) mean traces."""
    c, t = chain_series.shape
    if c < 2 or t < 2:
        return 1.0
    chain_means = chain_series.mean(axis=1)
    w = chain_series.var(axis=1, ddof=1).mean()
    b = t * chain_means.var(ddof=1)
    if w <= 0.0:
        return 1.0
    var_hat = (t - 1) / t * w + b / t
    return float(np.sqrt(var_hat / w))


def impute_mi(data: Dataset, cycles: int = 10, chains: int = 4,
              seed: int = 0) -> ImputationResult:
    """Conditional-model chained imputation with residual draws.

    Setup scans the missing pattern and the pairwise-complete
    correlation matrix; column pairs with |r| > 0.999 get an automatic
    ridge penalty. Independent chains (derived seeds) run mice-style
    cycles but add N(0, residual_sd^2) noise to each prediction. The
    final value is the across-chain average of the last cycle, and a
    between/within variance ratio per column reports convergence.
    """
    means = _column_means(data)
    order = _visit_order(data.mask)
    corr = _pairwise_correlation(data)
    off_diag = corr - np.eye(data.n_cols)
    flagged_pairs = [
        (int(a), int(b))
        for a, b in zip(*np.where(np.abs(np.nan_to_num(off_diag)) > 0.999))
        if a < b
    ]
    finite_corr = np.nan_to_num(corr, nan=0.0)
    eigvals = np.abs(np.linalg.eigvalsh(finite_corr))
    condition_number = float(eigvals.max() / max(eigvals.min(), 1e-300))

    n_chains = chains
    chain_finals = []
    # per column: (chains, cycles) trace of imputed-cell means
    traces = {int(v): np.zeros((n_chains, cycles)) for v in order}
    residual_sds = []
    for c in range(n_chains):
        rng = np.random.default_rng(stable_seed(seed, "mi-chain", c))
        working = data.values.copy()
        for j in range(data.n_cols):
            working[data.mask[:, j], j] = means[j]
        for cycle in range(cycles):
            for v in order:
                obs = ~data.mask[:, v]
                predictors = np.delete(np.arange(data.n_cols), v)
                predictor_set = set(int(u) for u in predictors)
                # collinearity only bites when both twins sit in the design
                needs_ridge = any(
                    a in predictor_set and b in predictor_set
                    for a, b in flagged_pairs
                )
                X_obs = working[np.ix_(obs, predictors)]
                forced = 0.0
                if needs_ridge:
                    forced = 1e-6 * float(np.trace(X_obs.T @ X_obs)) / max(
                        1, X_obs.shape[1]
                    )
                    if forced <= 0.0:
                        forced = 1e-6
                model = _fit_with_ridge_retry(X_obs, working[obs, v], forced)
                miss = data.mask[:, v]
                preds = predict_linear(model, working[np.ix_(miss, predictors)])
                noise = rng.normal(0.0, model.residual_sd, size=preds.size)
                working[miss, v] = preds + noise
                traces[int(v)][c, cycle] = working[miss, v].mean()
                if c == 0 and cycle == cycles - 1:
                    residual_sds.append(float(model.residual_sd))
        chain_finals.append(working[data.mask])

    pooled = data.values.copy()
    pooled[data.mask] = np.mean(chain_finals, axis=0)
    ratios = {data.column_names[v]: _psrf(traces[int(v)]) for v in order}
    converged = all(r < 1.2 for r in ratios.values()) if ratios else True
    diagnostics = {
        "chains": n_chains,
        "cycles": cycles,
        "flagged_pairs": flagged_pairs,
        "correlation_condition_number": condition_number,
        "missing_per_column": data.mask.sum(axis=0).tolist(),
        "chain_variance_ratios": ratios,
        "converged": converged,
        "residual_sds_final": residual_sds,
    }
    return _finish(data, pooled, diagnostics, "mi")


# --- amelia ---------------------------------------------------------------

def impute_amelia(data: Dataset, m: int = 5, tol: float = 1e-6,
                  max_iter: int = 500, seed: int = 0,
                  noise: bool = True) -> ImputationResult:
    """Bootstrapped EM over a multivariate normal model.

    Each of the m replicates resamples rows, fits theta = (mu, sigma) by
    EM on the replicate, and imputes every incomplete row of the
    original data from the conditional normal given that row's observed
    cells (a mean plus, by default, a conditional-covariance draw). The
    m imputations are pooled by averaging.
    """
    n, p = data.values.shape
    if n <= p:
        raise TooFewRowsError(f"need more rows than columns, got {n} x {p}")
    for j in range(p):
        obs = data.observed(j)
        if obs.size == 0:
            raise AllMissingColumnError(data.column_names[j])
        if obs.size >= 2 and obs.std(ddof=1) == 0.0:
            raise ZeroVarianceError(data.column_names[j])

    incomplete_rows = np.flatnonzero(data.mask.any(axis=1))
    if incomplete_rows.size == 0:
        return _finish(data, data.values.copy(),
                       {"m": m, "em_iterations": []}, "amelia")

    # group incomplete rows by pattern so each replicate solves each
    # observed block once
    patterns = {}
    for i in incomplete_rows:
        patterns.setdefault(data.mask[i].tobytes(), []).append(int(i))

    accum = np.zeros_like(data.values)
    em_iters = []
    for r in range(m):
        boot = bootstrap_sample(n, stable_seed(seed, "amelia-boot", r))
        replicate = Dataset(
            list(data.column_names), data.values[boot], data.mask[boot]
        )
        try:
            fit = em_mvn(replicate, tol=tol, max_iter=max_iter)
        except NoConvergenceError as err:
            raise NoConvergenceError(max_iter, params=err.params, replicate=r) from err
        em_iters.append(fit.iterations)
        rng = np.random.default_rng(stable_seed(seed, "amelia-draw", r))
        for key, row_list in patterns.items():
            pattern = np.frombuffer(key, dtype=bool)
            mis = np.flatnonzero(pattern)
            obs = np.flatnonzero(~pattern)
            rows = np.asarray(row_list)
            coef, offset, sigma_cond = conditional_map(fit.params, obs, mis)
            draws = offset + data.values[np.ix_(rows, obs)] @ coef.T
            if noise:
                vals, vecs = np.linalg.eigh(sigma_cond)
                root = vecs * np.sqrt(np.clip(vals, 0.0, None))
                draws = draws + rng.standard_normal((rows.size, mis.size)) @ root.T
            accum[np.ix_(rows, mis)] += draws

    working = data.values.copy()
    working[data.mask] = (accum / m)[data.mask]
    diagnostics = {
        "m": m,
        "em_iterations": em_iters,
        "noise": noise,
        "patterns": len(patterns),
    }
    return _finish(data, working, diagnostics, "amelia")


# --- hmisc ----------------------------------------------------------------

def impute_hmisc(data: Dataset, iterations: int = 10, burn_in: int = 3,
                 k: int = 5, seed: int = 0) -> ImputationResult:
    """Additive regression with bootstrap refits and predictive mean
    matching; imputed cells are always observed donor values.

    Masked cells start as random draws from their column's observed
    values. Each iteration refits every incomplete column on a bootstrap
    of its observed rows and replaces masked cells with PMM donors. The
    first burn_in iterations are warm-up; the result is the final
    iteration's data.
    """
    if burn_in >= iterations:
        raise UsageError(f"burn_in {burn_in} must be < iterations {iterations}")
    _check_columns_have_observations(data)
    rng = np.random.default_rng(stable_seed(seed, "hmisc"))
    working = data.values.copy()
    for j in range(data.n_cols):
        obs_vals = data.observed(j)
        miss = data.mask[:, j]
        working[miss, j] = rng.choice(obs_vals, size=int(miss.sum()), replace=True)
    order = _visit_order(data.mask)
    for _ in range(iterations):
        for v in order:
            obs = np.flatnonzero(~data.mask[:, v])
            miss = np.flatnonzero(data.mask[:, v])
            predictors = np.delete(np.arange(data.n_cols), v)
            boot = obs[bootstrap_sample(obs.size,
                                        int(rng.integers(0, 2**63)))]
            model = _fit_with_ridge_retry(working[np.ix_(boot, predictors)],
                                          working[boot, v])
            pred_obs = predict_linear(model, working[np.ix_(obs, predictors)])
            pred_miss = predict_linear(model, working[np.ix_(miss, predictors)])
            working[miss, v] = pmm_match_many(
                pred_miss, pred_obs, working[obs, v], k, rng
            )
    diagnostics = {"iterations": iterations, "burn_in": burn_in, "k": k}
    return _finish(data, working, diagnostics, "hmisc")


# --- missforest -----------------------------------------------------------

def impute_missforest(data: Dataset, tree_count: int = 64, max_iter: int = 10,
                      seed: int = 0, min_leaf: int = 5) -> ImputationResult:
    """Iterative random-forest imputation with the relative-change stop.

    Masked cells start at column means. Each iteration refits a forest
    per incomplete column (ascending missing count) on rows where the
    column is observed and predicts its masked cells. Iteration stops
    when the scaled change sum(|new - old|^2) / sum(new^2) over imputed
    cells increases, returning the previous iteration's values, or at
    max_iter.
    """
    means = _column_means(data)
    working = data.values.copy()
    for j in range(data.n_cols):
        working[data.mask[:, j], j] = means[j]
    order = _visit_order(data.mask)
    if order.size == 0:
        return _finish(data, working, {"iterations": 0, "deltas": []}, "missforest")

    mtry = max(1, (data.n_cols - 1) // 3)
    deltas = []
    prev_imputed = working[data.mask].copy()
    prev_working = working.copy()
    stopped_early = False
    iterations_run = 0
    for t in range(1, max_iter + 1):
        for v in order:
            obs = ~data.mask[:, v]
            miss = data.mask[:, v]
            predictors = np.delete(np.arange(data.n_cols), v)
            forest = fit_forest(
                working[np.ix_(obs, predictors)],
                working[obs, v],
                tree_count=tree_count,
                mtry=mtry,
                min_leaf=min_leaf,
                seed=stable_seed(seed, "missforest", t, int(v)),
            )
            working[miss, v] = predict_forest(
                forest, working[np.ix_(miss, predictors)]
            )
        new_imputed = working[data.mask]
        denom = float((new_imputed**2).sum())
        delta = float(((new_imputed - prev_imputed) ** 2).sum()) / max(
            denom, 1e-300
        )
        deltas.append(delta)
        iterations_run = t
        if t >= 2 and delta > deltas[-2]:
            working = prev_working
            stopped_early = True
            break
        prev_imputed = new_imputed.copy()
        prev_working = working.copy()
    diagnostics = {
        "iterations": iterations_run,
        "deltas": deltas,
        "stopped_early": stopped_early,
        "tree_count": tree_count,
        "mtry": mtry,
    }
    return _finish(data, working, diagnostics, "missforest")


# --- dispatch ---------------------------------------------------------------

def run_imputer(data: Dataset, spec: ImputerSpec) -> ImputationResult:
    opts = spec.options
    if spec.method == "mean":
        return impute_mean(data, seed=spec.seed)
    if spec.method == "mice":
        return impute_mice(data, cycles=opts.get("cycles", 10), seed=spec.seed)
    if spec.method == "mi":
        return impute_mi(
            data,
            cycles=opts.get("cycles", 10),
            chains=opts.get("chains", 4),
            seed=spec.seed,
        )
    if spec.method == "amelia":
        return impute_amelia(
            data,
            m=opts.get("m", 5),
            tol=opts.get("tol", 1e-6),
            max_iter=opts.get("max_iter", 500),
            seed=spec.seed,
            noise=opts.get("noise", True),
        )
    if spec.method == "hmisc":
        return impute_hmisc(
            data,
            iterations=opts.get("iterations", 10),
            burn_in=opts.get("burn_in", 3),
            k=opts.get("k", 5),
            seed=spec.seed,
        )
    if spec.method == "missforest":
        return impute_missforest(
            data,
            tree_count=opts.get("tree_count", 64),
            max_iter=opts.get("max_iter", 10),
            seed=spec.seed,
            min_leaf=opts.get("min_leaf", 5),
        )
    raise UsageError(f"unknown method {spec.method!r}")

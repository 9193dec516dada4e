"""Adaptive-Lasso variable selection driven by a correlation-matrix loss.

The fitted objective is the covariance-form quadratic

    n * b' G b  -  2 n * b' c  +  lambda * sum_j w_j |b_j|

with G and c the predictor block and predictor-response column of a
(robust) correlation matrix. Fitting happens on the standardised scale
(unit diagonal), and coefficients are mapped back to original units at the
end. Cellwise robustness comes entirely from the plugged-in correlation
estimator and the per-column location/scale summaries.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .covariance import CorrelationMatrix, _pearson_of_values, score_matrix
from .data import DataMatrix
from .robust_stats import RobustSummary, normal_scores, robust_summary

__all__ = [
    "AdaptiveWeights",
    "LassoPath",
    "CvCurve",
    "SelectionFit",
    "column_summaries",
    "initial_estimate_direct",
    "initial_estimate_ridge",
    "adaptive_weights",
    "lambda_grid",
    "weighted_lasso_cd",
    "penalized_objective",
    "fit_path",
    "cross_validate",
    "destandardize",
    "marginal_gr_correlations",
    "screen_top_k",
    "fit_gr_alasso",
]

_ESTIMATOR_KINDS = {
    "gr": "gaussian-rank",
    "gaussian-rank": "gaussian-rank",
    "spearman": "spearman",
    "pearson": "pearson",
}


@dataclass(frozen=True)
class AdaptiveWeights:
    """Per-predictor penalty weights; +inf pins a coefficient at zero."""

    weights: np.ndarray
    source: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(np.isnan(w)) or np.any(w <= 0.0):
            raise ValueError("weights must be positive (or +inf)")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class LassoPath:
    """Solutions over a descending lambda grid (standardised scale)."""

    lambdas: np.ndarray
    coefficients: np.ndarray
    supports: tuple
    iterations: np.ndarray
    converged: np.ndarray


@dataclass(frozen=True)
class CvCurve:
    """Per-lambda cross-validation error with the min and one-SE choices."""

    lambdas: np.ndarray
    mean_errors: np.ndarray
    se_errors: np.ndarray
    idx_min: int
    idx_1se: int

    @property
    def lambda_min(self) -> float:
        return float(self.lambdas[self.idx_min])

    @property
    def lambda_1se(self) -> float:
        return float(self.lambdas[self.idx_1se])


@dataclass(frozen=True)
class SelectionFit:
    """Complete fit: coefficients in original units plus the path and CV
    diagnostics that produced them."""

    beta: np.ndarray
    intercept: float
    support: tuple
    lambda_: float
    path: LassoPath
    cv: CvCurve | None
    summaries: tuple
    columns: tuple
    estimator: str
    weights: AdaptiveWeights
    converged: bool

    @property
    def selected_names(self) -> tuple:
        return tuple(self.columns[1 + j] for j in self.support)


def column_summaries(Z, estimator: str = "gr"):
    """Per-column location/scale pairs, response first.

    Robust estimators use median and Qn; the Pearson baseline uses mean and
    standard deviation, matching its own standardisation convention.
    """
    kind = _ESTIMATOR_KINDS.get(estimator)
    if kind is None:
        raise ValueError(f"unknown estimator {estimator!r}")
    values = Z.values if isinstance(Z, DataMatrix) else np.asarray(Z, dtype=float)
    names = Z.columns if isinstance(Z, DataMatrix) else tuple(
        f"col{j}" for j in range(values.shape[1])
    )
    out = []
    for j in range(values.shape[1]):
        col = values[:, j]
        if kind == "pearson":
            summ = RobustSummary(float(np.mean(col)), float(np.std(col, ddof=1)))
        else:
            summ = robust_summary(col)
        if summ.scale <= 0.0:
            raise ValueError(f"zero scale for column {names[j]!r}")
        out.append(summ)
    return out


def initial_estimate_direct(cov) -> np.ndarray:
    """Unpenalised plug-in estimate: solve G beta = c.

    Requires a well-conditioned predictor block; otherwise directs the
    caller to the ridge variant.
    """
    gram = np.asarray(cov.xx, dtype=float)
    c = np.asarray(cov.xy, dtype=float)
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond >= 1e12:
        raise ValueError(
            f"predictor covariance is ill-conditioned (cond ~ {cond:.3g}); "
            "use the ridge initial estimate"
        )
    return np.linalg.solve(gram, c)


def initial_estimate_ridge(cov, kappa: float) -> np.ndarray:
    """Ridge plug-in estimate: solve (G + kappa * I) beta = c."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    gram = np.asarray(cov.xx, dtype=float)
    c = np.asarray(cov.xy, dtype=float)
    return np.linalg.solve(gram + kappa * np.eye(gram.shape[0]), c)


def adaptive_weights(beta_init, exclusion_eps: float = 1e-10,
                     source: str = "direct-inverse") -> AdaptiveWeights:
    """Weights 1/|beta_init_j|; magnitudes at or below `exclusion_eps` get an
    infinite weight, excluding the predictor at every lambda."""
    if exclusion_eps < 0:
        raise ValueError("exclusion_eps must be nonnegative")
    mag = np.abs(np.asarray(beta_init, dtype=float))
    w = np.full(mag.shape, np.inf)
    keep = mag > exclusion_eps
    w[keep] = 1.0 / mag[keep]
    return AdaptiveWeights(w, source)


def lambda_grid(gram, c, w, n: int, n_lambda: int = 100,
                ratio: float = 1e-3) -> np.ndarray:
    """Descending log-spaced grid from lambda_max (smallest lambda with an
    all-zero solution) down to lambda_max * ratio."""
    if n_lambda < 2:
        raise ValueError("n_lambda must be at least 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    wv = w.weights if isinstance(w, AdaptiveWeights) else np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=float)
    finite = np.isfinite(wv)
    if not np.any(finite):
        raise ValueError("no admissible predictors")
    lam_max = float(np.max(2.0 * n * np.abs(c[finite]) / wv[finite]))
    if lam_max <= 0.0:
        warnings.warn("degenerate lambda grid: all admissible covariances are zero")
        return np.zeros(1)
    return np.geomspace(lam_max, lam_max * ratio, n_lambda)


def _cd_solve(gram, c, wv, lam, n, warm, tol, max_iter):
    """Cyclic coordinate descent on the penalised quadratic.

    Convergence needs both a small maximum coordinate change and a passing
    KKT certificate; returns (solution, sweeps, converged).
    """
    p = c.size
    b = np.zeros(p) if warm is None else np.array(warm, dtype=float, copy=True)
    finite = np.isfinite(wv)
    b[~finite] = 0.0
    order = np.flatnonzero(finite)
    diag = np.diagonal(gram)
    if np.any(diag[order] <= 0.0):
        raise ValueError("degenerate predictor variance")
    thr = np.zeros(p)
    thr[order] = lam * wv[order] / (2.0 * n)
    s = gram @ b
    slack = 10.0 * tol * n
    lamw = lam * wv
    iters = 0
    converged = False
    for sweep in range(1, max_iter + 1):
        iters = sweep
        dmax = 0.0
        for j in order:
            gj = diag[j]
            rho = c[j] - s[j] + gj * b[j]
            t = thr[j]
            if rho > t:
                bj = (rho - t) / gj
            elif rho < -t:
                bj = (rho + t) / gj
            else:
                bj = 0.0
            d = bj - b[j]
            if d != 0.0:
                s += d * gram[j]
                b[j] = bj
                ad = abs(d)
                if ad > dmax:
                    dmax = ad
        if dmax < tol:
            s = gram @ b
            grad = 2.0 * n * (s - c)
            nz = finite & (b != 0.0)
            zz = finite & (b == 0.0)
            ok = bool(
                np.all(np.abs(grad[nz] + lamw[nz] * np.sign(b[nz])) <= slack)
                and np.all(np.abs(grad[zz]) <= lamw[zz] + slack)
            )
            if ok:
                converged = True
                break
    return b, iters, converged


def weighted_lasso_cd(gram, c, w, lam: float, n: int, warm=None,
                      tol: float = 1e-7, max_iter: int = 10000) -> np.ndarray:
    """Minimise n b'Gb - 2n b'c + lambda sum w_j |b_j| by coordinate descent.

    Coordinate update: b_j <- softthreshold(c_j - sum_{k != j} G_jk b_k,
    lambda w_j / (2n)) / G_jj, cycling until the largest coordinate change
    drops below `tol` and the KKT residuals certify the solution.
    """
    gram = np.asarray(gram, dtype=float)
    c = np.asarray(c, dtype=float)
    wv = w.weights if isinstance(w, AdaptiveWeights) else np.asarray(w, dtype=float)
    if gram.shape != (c.size, c.size) or wv.size != c.size:
        raise ValueError("dimension mismatch between gram, c and weights")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    b, _, converged = _cd_solve(gram, c, wv, lam, n, warm, tol, max_iter)
    if not converged:
        warnings.warn(
            f"coordinate descent stopped after {max_iter} sweeps without a "
            "KKT certificate; returning the last iterate"
        )
    return b


def penalized_objective(gram, c, w, lam: float, n: int, b) -> float:
    """Objective value n b'Gb - 2n b'c + lambda sum w_j |b_j|."""
    b = np.asarray(b, dtype=float)
    wv = w.weights if isinstance(w, AdaptiveWeights) else np.asarray(w, dtype=float)
    quad = float(n * b @ np.asarray(gram, dtype=float) @ b - 2.0 * n * b @ np.asarray(c, dtype=float))
    act = b != 0.0
    if np.any(~np.isfinite(wv[act])):
        return np.inf
    return quad + float(lam * np.sum(wv[act] * np.abs(b[act])))


def fit_path(cov, w, grid, n: int, tol: float = 1e-7,
             max_iter: int = 10000) -> LassoPath:
    """Warm-started solution path over a descending lambda grid.

    `cov` is anything with `xx`/`xy` partitions (a CorrelationMatrix or a
    CovarianceModel).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size > 1 and np.any(np.diff(grid) >= 0):
        raise ValueError("lambda grid must be strictly descending")
    gram = np.asarray(cov.xx, dtype=float)
    c = np.asarray(cov.xy, dtype=float)
    wv = w.weights if isinstance(w, AdaptiveWeights) else np.asarray(w, dtype=float)
    p = c.size
    coefs = np.zeros((grid.size, p))
    iters = np.zeros(grid.size, dtype=int)
    conv = np.zeros(grid.size, dtype=bool)
    supports = []
    b = np.zeros(p)
    for i, lam in enumerate(grid):
        b, iters[i], conv[i] = _cd_solve(gram, c, wv, float(lam), n, b, tol, max_iter)
        coefs[i] = b
        supports.append(tuple(int(j) for j in np.flatnonzero(b != 0.0)))
    if not np.all(conv):
        warnings.warn("coordinate descent did not certify convergence at "
                      f"{int(np.sum(~conv))} of {grid.size} grid points")
    return LassoPath(lambdas=grid.copy(), coefficients=coefs,
                     supports=tuple(supports), iterations=iters, converged=conv)


def cross_validate(pseudo, w, grid, folds: int = 5, seed: int = 0, n=None,
                   tol: float = 1e-7, max_iter: int = 10000) -> CvCurve:
    """K-fold cross-validation on the pseudo-data (response in column 0).

    Rows are shuffled once with the given seed and split into contiguous
    blocks. Each fold refits the Pearson correlation matrix of its training
    rows, traces the path with the provided weights, and scores the held-out
    rows by the mean squared residual of pseudo response minus pseudo
    predictors times the standardised coefficients. `idx_min` marks the
    smallest mean error; `idx_1se` the largest lambda whose mean error stays
    within one standard error of it.
    """
    values = pseudo.values if isinstance(pseudo, DataMatrix) else np.asarray(pseudo, dtype=float)
    n_rows, width = values.shape
    p = width - 1
    if folds < 2:
        raise ValueError("folds must be at least 2")
    if n_rows < folds:
        raise ValueError("need at least as many rows as folds")
    if n is None:
        n = n_rows
    grid = np.asarray(grid, dtype=float)
    wv = w.weights if isinstance(w, AdaptiveWeights) else np.asarray(w, dtype=float)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_rows)
    blocks = np.array_split(perm, folds)
    errors = np.empty((folds, grid.size))
    for f, block in enumerate(blocks):
        train = np.setdiff1d(perm, block)
        if p < n_rows and train.size < p + 2:
            warnings.warn(
                f"fold {f}: only {train.size} training rows for {p} predictors"
            )
        corr = _pearson_of_values(values[train])
        gram = corr[1:, 1:]
        cvec = corr[1:, 0]
        held_y = values[block, 0]
        held_x = values[block, 1:]
        b = np.zeros(p)
        for i, lam in enumerate(grid):
            b, _, _ = _cd_solve(gram, cvec, wv, float(lam), n, b, tol, max_iter)
            resid = held_y - held_x @ b
            errors[f, i] = float(np.mean(resid * resid))
    mean = errors.mean(axis=0)
    se = errors.std(axis=0, ddof=1) / np.sqrt(folds)
    idx_min = int(np.argmin(mean))
    threshold = mean[idx_min] + se[idx_min]
    idx_1se = int(np.flatnonzero(mean <= threshold)[0])
    return CvCurve(lambdas=grid.copy(), mean_errors=mean, se_errors=se,
                   idx_min=idx_min, idx_1se=idx_1se)


def destandardize(beta_std, summaries):
    """Map standardised coefficients to original units and recover the
    intercept from the column locations."""
    beta_std = np.asarray(beta_std, dtype=float)
    resp = summaries[0]
    preds = summaries[1:]
    if len(preds) != beta_std.size:
        raise ValueError("summary/coefficient length mismatch")
    scales = np.asarray([s.scale for s in preds], dtype=float)
    if np.any(scales <= 0.0):
        raise ValueError("zero scale in predictor summaries")
    beta = beta_std * resp.scale / scales
    locs = np.asarray([s.location for s in preds], dtype=float)
    intercept = resp.location - float(locs @ beta)
    return beta, intercept


def marginal_gr_correlations(Z) -> np.ndarray:
    """Gaussian-rank correlation of each predictor with the response.

    Predictors whose values are all tied get a correlation of 0 (they carry
    no rank signal); a tied response raises.
    """
    values = Z.values if isinstance(Z, DataMatrix) else np.asarray(Z, dtype=float)
    y = values[:, 0]
    if np.all(y == y[0]):
        raise ValueError("degenerate response: all values tied")
    ys = normal_scores(y)
    ys = (ys - ys.mean()) / np.linalg.norm(ys - ys.mean())
    out = np.zeros(values.shape[1] - 1)
    for j in range(1, values.shape[1]):
        col = values[:, j]
        if np.all(col == col[0]):
            continue
        xs = normal_scores(col)
        xs = xs - xs.mean()
        norm = np.linalg.norm(xs)
        if norm > 0.0:
            out[j - 1] = float(ys @ (xs / norm))
    return np.clip(out, -1.0, 1.0)


def screen_top_k(Z, k: int) -> np.ndarray:
    """Indices of the k predictors with the largest absolute Gaussian-rank
    correlation with the response; ties keep original column order."""
    values = Z.values if isinstance(Z, DataMatrix) else np.asarray(Z, dtype=float)
    p = values.shape[1] - 1
    if not 1 <= k <= p:
        raise ValueError(f"k must be in 1..{p}")
    corr = marginal_gr_correlations(Z)
    order = np.argsort(-np.abs(corr), kind="stable")
    return order[:k]


def _ridge_kappa_by_cv(values, folds, seed, kappas=None):
    """Pick the ridge penalty for the initial estimate by pseudo-data CV."""
    if kappas is None:
        kappas = np.logspace(-3.0, 1.0, 9)
    p = values.shape[1] - 1
    rng = np.random.default_rng(seed)
    perm = rng.permutation(values.shape[0])
    blocks = np.array_split(perm, folds)
    errs = np.zeros((len(blocks), len(kappas)))
    for f, block in enumerate(blocks):
        train = np.setdiff1d(perm, block)
        corr = _pearson_of_values(values[train])
        gram = corr[1:, 1:]
        cvec = corr[1:, 0]
        eye = np.eye(p)
        held_y = values[block, 0]
        held_x = values[block, 1:]
        for i, kap in enumerate(kappas):
            b = np.linalg.solve(gram + kap * eye, cvec)
            resid = held_y - held_x @ b
            errs[f, i] = float(np.mean(resid * resid))
    return float(kappas[int(np.argmin(errs.mean(axis=0)))])


def fit_gr_alasso(Z, *, estimator: str = "gr", weights: str = "auto",
                  kappa=0.1, exclusion_eps: float = 1e-10,
                  n_lambda: int = 100, lambda_ratio=None, folds: int = 5,
                  rule: str = "1se", seed: int = 0, fixed_lambda=None,
                  tol: float = 1e-7, max_iter: int = 10000) -> SelectionFit:
    """Fit the full selection pipeline on a response-first data table.

    Steps: per-column summaries -> pseudo-data scores -> correlation matrix
    -> initial estimate (direct when p < n/2, ridge otherwise) -> adaptive
    weights -> lambda grid -> pseudo-data cross-validation -> coefficients
    at the chosen lambda -> original units.

    `estimator` selects the correlation plug-in ("gr", "spearman" or
    "pearson"); `weights` one of "auto", "direct", "ridge" or "unit" (plain
    Lasso). `kappa` is the ridge penalty for the initial estimate, or "cv"
    to pick it from a log grid by the same pseudo-data cross-validation.
    `fixed_lambda` skips CV and solves at the given penalty. With
    `rule="min"` the CV-minimising lambda is used instead of the
    one-standard-error choice.
    """
    if not isinstance(Z, DataMatrix):
        Z = DataMatrix(np.asarray(Z, dtype=float),
                       tuple(f"col{j}" for j in range(np.asarray(Z).shape[1])))
    if Z.n < 10:
        raise ValueError("need at least 10 observations")
    kind = _ESTIMATOR_KINDS.get(estimator)
    if kind is None:
        raise ValueError(f"unknown estimator {estimator!r}")
    if rule not in ("1se", "min"):
        raise ValueError(f"unknown selection rule {rule!r}")
    n, p = Z.n, Z.p

    summaries = column_summaries(Z, estimator)
    scores = score_matrix(Z, kind)
    R = CorrelationMatrix(_pearson_of_values(scores, Z.columns), kind, Z.columns)

    low_dim = p < n / 2
    if weights == "unit":
        wobj = AdaptiveWeights(np.ones(p), "unit")
    elif weights in ("auto", "direct", "ridge"):
        mode = weights if weights != "auto" else ("direct" if low_dim else "ridge")
        if mode == "direct":
            beta_init = initial_estimate_direct(R)
            wobj = adaptive_weights(beta_init, exclusion_eps, "direct-inverse")
        else:
            kap = (_ridge_kappa_by_cv(scores, folds, seed)
                   if kappa == "cv" else float(kappa))
            beta_init = initial_estimate_ridge(R, kap)
            wobj = adaptive_weights(beta_init, exclusion_eps, f"ridge(kappa={kap:g})")
    else:
        raise ValueError(f"unknown weights mode {weights!r}")

    ratio = lambda_ratio if lambda_ratio is not None else (1e-3 if low_dim else 1e-2)
    grid = lambda_grid(R.xx, R.xy, wobj, n, n_lambda=n_lambda, ratio=ratio)

    cv = None
    if fixed_lambda is None:
        cv = cross_validate(scores, wobj, grid, folds=folds, seed=seed, n=n,
                            tol=tol, max_iter=max_iter)
        idx = cv.idx_1se if rule == "1se" else cv.idx_min
        chosen = float(grid[idx])
    else:
        if fixed_lambda < 0:
            raise ValueError("lambda must be nonnegative")
        chosen = float(fixed_lambda)

    path = fit_path(R, wobj, grid, n, tol=tol, max_iter=max_iter)
    if fixed_lambda is None:
        b_std = path.coefficients[idx]
        converged = bool(path.converged[idx])
    else:
        b_std, _, converged = _cd_solve(R.xx, R.xy, wobj.weights, chosen, n,
                                        path.coefficients[-1], tol, max_iter)

    beta, intercept = destandardize(b_std, summaries)
    support = tuple(int(j) for j in np.flatnonzero(b_std != 0.0))
    return SelectionFit(beta=beta, intercept=intercept, support=support,
                        lambda_=chosen, path=path, cv=cv,
                        summaries=tuple(summaries), columns=Z.columns,
                        estimator=kind, weights=wobj, converged=converged)

"""Standard scaling, maximum-likelihood logistic regression, Wald inference.

The fit maximizes the Bernoulli log-likelihood with a logistic link by
Newton/IRLS steps with step-halving, converging when the gradient max-norm
drops below tolerance.  An optional ridge penalty (intercept excluded)
makes separable data fittable; without it, separation raises a FitError
that says so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

Z_95 = 1.959964  # two-sided 95% normal critical value

STAR_THRESHOLDS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


class ScaleError(ValueError):
    pass


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature location/scale; std is the population (1/n) convention."""

    names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray


def standard_scale(
    X: np.ndarray, names: Optional[Sequence[str]] = None
) -> tuple[np.ndarray, ScalerParams]:
    """Center and scale each column to mean 0, std 1 (labels are not passed here)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ScaleError("standard scaling needs a 2-d table with at least 2 rows")
    if names is None:
        names = tuple(f"x{i}" for i in range(X.shape[1]))
    names = tuple(names)
    mean = X.mean(axis=0)
    std = X.std(axis=0)  # population convention
    constant = np.where(std == 0)[0]
    if constant.size:
        raise ScaleError(f"constant feature column: {names[constant[0]]}")
    return (X - mean) / std, ScalerParams(names, mean, std)


def _stable_sigmoid(eta: np.ndarray) -> np.ndarray:
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    expeta = np.exp(eta[~pos])
    out[~pos] = expeta / (1.0 + expeta)
    return out


def log_likelihood(design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
    """Bernoulli log-likelihood at beta; ``design`` includes any intercept column."""
    eta = design @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def log_likelihood_gradient(design: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return design.T @ (y - _stable_sigmoid(design @ beta))


@dataclass
class RegressionFit:
    beta: np.ndarray  # intercept first
    covariance: np.ndarray  # inverse observed information at the optimum
    log_likelihood: float
    converged: bool
    iterations: int
    n_obs: int
    ridge: float
    ll_path: list[float]


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
    ridge: float = 0.0,
) -> RegressionFit:
    """Fit P(y=1|x) = sigmoid(b0 + x.beta) by Newton/IRLS.

    ``X`` is the feature matrix without an intercept column.  Raises
    FitError for single-class labels, non-convergence, or (numerically
    detected) perfect separation when ridge is 0.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise FitError("X and y shapes do not align")
    classes = set(np.unique(y))
    if not classes <= {0.0, 1.0}:
        raise FitError(f"labels must be 0/1, got {sorted(classes)}")
    if len(classes) < 2:
        raise FitError("labels contain a single class; nothing to fit")
    n = X.shape[0]
    design = np.column_stack([np.ones(n), X])
    p_dim = design.shape[1]
    penalty_mask = np.ones(p_dim)
    penalty_mask[0] = 0.0  # intercept unpenalized

    def objective(beta: np.ndarray) -> float:
        return log_likelihood(design, y, beta) - 0.5 * ridge * float(
            np.sum(penalty_mask * beta**2)
        )

    beta = np.zeros(p_dim)
    current = objective(beta)
    path = [current]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        prob = _stable_sigmoid(design @ beta)
        grad = design.T @ (y - prob) - ridge * penalty_mask * beta
        if np.max(np.abs(grad)) < tol:
            converged = True
            iterations -= 1
            break
        weights = np.clip(prob * (1.0 - prob), 1e-12, None)
        hessian = (design * weights[:, None]).T @ design + ridge * np.diag(penalty_mask)
        try:
            step = np.linalg.solve(hessian, grad)
        except np.linalg.LinAlgError as err:
            raise FitError(
                "singular information matrix (perfect separation or collinear features); "
                "a small ridge > 0 makes this fittable"
            ) from err
        scale = 1.0
        candidate = beta + step
        value = objective(candidate)
        halvings = 0
        while value < current - 1e-12 and halvings < 50:
            scale *= 0.5
            candidate = beta + scale * step
            value = objective(candidate)
            halvings += 1
        beta = candidate
        current = value
        path.append(current)
        if not np.isfinite(current) or np.max(np.abs(beta)) > 1e8:
            raise FitError(
                "diverging coefficients (perfect separation); a small ridge > 0 makes this fittable"
            )
    else:
        prob = _stable_sigmoid(design @ beta)
        grad = design.T @ (y - prob) - ridge * penalty_mask * beta
        converged = bool(np.max(np.abs(grad)) < tol)
    if not converged:
        hint = " — perfect separation is likely; set ridge > 0" if ridge == 0 else ""
        raise FitError(f"IRLS did not converge in {max_iter} iterations{hint}")
    if ridge == 0 and np.max(np.abs(beta)) > 1e2:
        raise FitError(
            "coefficients ran away before the gradient test tripped (perfect separation); "
            "set ridge > 0"
        )
    prob = _stable_sigmoid(design @ beta)
    weights = np.clip(prob * (1.0 - prob), 1e-12, None)
    information = (design * weights[:, None]).T @ design + ridge * np.diag(penalty_mask)
    covariance = np.linalg.inv(information)
    return RegressionFit(
        beta=beta,
        covariance=covariance,
        log_likelihood=log_likelihood(design, y, beta),
        converged=True,
        iterations=iterations,
        n_obs=n,
        ridge=ridge,
        ll_path=path,
    )


def predict_proba(fit: RegressionFit, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    design = np.column_stack([np.ones(X.shape[0]), X])
    return _stable_sigmoid(design @ fit.beta)


def accuracy(fit: RegressionFit, X: np.ndarray, y: np.ndarray) -> float:
    """In-sample fraction where (predicted probability >= 0.5) equals the label."""
    predictions = (predict_proba(fit, X) >= 0.5).astype(float)
    return float(np.mean(predictions == np.asarray(y, dtype=float)))


def _stratified_folds(y: np.ndarray, folds: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(y), dtype=int)
    for cls in np.unique(y):
        idx = np.where(y == cls)[0]
        rng.shuffle(idx)
        for i, position in enumerate(idx):
            assignments[position] = i % folds
    return [np.where(assignments == k)[0] for k in range(folds)]


def cross_validated_accuracy(
    X: np.ndarray,
    y: np.ndarray,
    *,
    folds: int = 5,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 100,
    ridge: float = 0.0,
) -> Optional[float]:
    """Pooled k-fold accuracy with seeded stratified folds.

    Returns None when folds are infeasible (too few rows or a training
    split would be single-class).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) < folds:
        return None
    counts = {cls: int(np.sum(y == cls)) for cls in np.unique(y)}
    if len(counts) < 2 or min(counts.values()) < 2:
        return None
    correct = 0
    for test_idx in _stratified_folds(y, folds, seed):
        if len(test_idx) == 0:
            continue
        train_mask = np.ones(len(y), dtype=bool)
        train_mask[test_idx] = False
        y_train = y[train_mask]
        if len(np.unique(y_train)) < 2:
            return None
        fit = fit_logistic(X[train_mask], y_train, tol=tol, max_iter=max_iter, ridge=ridge)
        predictions = (predict_proba(fit, X[test_idx]) >= 0.5).astype(float)
        correct += int(np.sum(predictions == y[test_idx]))
    return correct / len(y)


@dataclass(frozen=True)
class PredictorInference:
    name: str
    beta: float
    ci_low: float
    ci_high: float
    p_value: float
    stars: str


@dataclass
class RegressionSummary:
    rows: list[PredictorInference]
    accuracy: Optional[float] = None
    cv_accuracy: Optional[float] = None
    n_obs: int = 0


def _two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def _stars(p: float) -> str:
    for threshold, mark in STAR_THRESHOLDS:
        if p < threshold:
            return mark
    return ""


def wald_summary(
    fit: RegressionFit,
    names: Sequence[str],
    *,
    accuracy: Optional[float] = None,
    cv_accuracy: Optional[float] = None,
) -> RegressionSummary:
    """Coefficients with 95% CIs and two-sided normal p-values."""
    if not fit.converged:
        raise FitError("wald_summary requires a converged fit")
    labels = ["const"] + list(names)
    if len(labels) != len(fit.beta):
        raise FitError(f"{len(labels)} names for {len(fit.beta)} coefficients")
    se = np.sqrt(np.diag(fit.covariance))
    rows = []
    for name, b, s in zip(labels, fit.beta, se):
        z = b / s if s > 0 else math.inf
        p = _two_sided_p(z)
        rows.append(
            PredictorInference(
                name=name,
                beta=float(b),
                ci_low=float(b - Z_95 * s),
                ci_high=float(b + Z_95 * s),
                p_value=float(p),
                stars=_stars(p),
            )
        )
    return RegressionSummary(rows=rows, accuracy=accuracy, cv_accuracy=cv_accuracy, n_obs=fit.n_obs)


def format_summary(summary: RegressionSummary, title: str = "") -> str:
    """Aligned text table: predictor, beta, 0.025, 0.975, significance."""
    name_width = max(len("predictor"), max(len(r.name) for r in summary.rows))
    lines = []
    if title:
        lines.append(title)
    header = f"{'predictor':<{name_width}}  {'beta':>8}  {'[0.025':>8}  {'0.975]':>8}  {'pval':>9}  sig."
    lines.append(header)
    lines.append("-" * len(header))
    for r in summary.rows:
        lines.append(
            f"{r.name:<{name_width}}  {r.beta:>8.3f}  {r.ci_low:>8.2f}  {r.ci_high:>8.2f}  "
            f"{r.p_value:>9.2e}  {r.stars}"
        )
    if summary.accuracy is not None:
        lines.append(f"accuracy (in-sample): {summary.accuracy:.3f}   n = {summary.n_obs}")
    if summary.cv_accuracy is not None:
        lines.append(f"accuracy (5-fold CV): {summary.cv_accuracy:.3f}")
    elif summary.accuracy is not None:
        lines.append("accuracy (5-fold CV): not computed (folds infeasible)")
    return "\n".join(lines)


def summary_to_dict(summary: RegressionSummary) -> dict:
    return {
        "predictors": [
            {
                "name": r.name,
                "beta": r.beta,
                "ci_low": r.ci_low,
                "ci_high": r.ci_high,
                "p_value": r.p_value,
                "significance": r.stars,
            }
            for r in summary.rows
        ],
        "accuracy": summary.accuracy,
        "cv_accuracy": summary.cv_accuracy,
        "n_obs": summary.n_obs,
    }

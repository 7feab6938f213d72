"""Brute-force Newton oracle for logistic regression.

Differentiates the penalized Bernoulli log-likelihood *numerically*
(central differences for both gradient and Hessian) and Newton-iterates to
a stationary point.  Shares no derivative formulas with the package.
"""

import numpy as np


def _objective(design, y, beta, ridge):
    eta = design @ beta
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    penalty = 0.5 * ridge * float(np.sum(beta[1:] ** 2))
    return ll - penalty


def fd_gradient(f, beta, h=1e-5):
    grad = np.zeros_like(beta)
    for i in range(len(beta)):
        step = np.zeros_like(beta)
        step[i] = h
        grad[i] = (f(beta + step) - f(beta - step)) / (2 * h)
    return grad


def fd_hessian(f, beta, h=1e-4):
    p = len(beta)
    hess = np.zeros((p, p))
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h
        for j in range(i, p):
            ej = np.zeros(p)
            ej[j] = h
            value = (
                f(beta + ei + ej) - f(beta + ei - ej) - f(beta - ei + ej) + f(beta - ei - ej)
            ) / (4 * h * h)
            hess[i, j] = value
            hess[j, i] = value
    return hess


def newton_logistic(X, y, *, ridge=0.0, tol=1e-9, max_iter=200):
    """Maximize the (penalized) log-likelihood by finite-difference Newton.

    Returns the coefficient vector with the intercept first.  Diverges on
    separable data with ridge 0, like the true MLE does.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.column_stack([np.ones(len(y)), X])

    def f(beta):
        return _objective(design, y, beta, ridge)

    beta = np.zeros(design.shape[1])
    for _ in range(max_iter):
        grad = fd_gradient(f, beta)
        if np.max(np.abs(grad)) < tol:
            break
        hess = fd_hessian(f, beta)
        step = np.linalg.solve(hess, grad)
        candidate = beta - step  # Newton on a maximum: H is negative definite
        # crude backtracking so the objective never decreases
        scale = 1.0
        while f(candidate) < f(beta) - 1e-12 and scale > 1e-8:
            scale *= 0.5
            candidate = beta - scale * step
        beta = candidate
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > 1e6:
            raise FloatingPointError("oracle diverged (separable data?)")
    return beta

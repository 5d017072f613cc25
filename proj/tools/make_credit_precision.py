"""Writes a 49-dimensional logistic-regression posterior precision.

The design mimics the German credit layout: 1000 rows, 7 numeric columns
(standardized) and 13 categorical columns with 4, 5, 10, 5, 5, 4, 3, 4, 3,
3, 4, 2, 2 levels (first level dropped), plus an intercept. Responses are
simulated from a logistic model. The output is the negative Hessian of the
log posterior (prior N(0, 100 I)) at its mode, and the mode itself.

Usage: python3 make_credit_precision.py OUT_DIR
"""

import sys
from pathlib import Path

import numpy as np

LEVELS = [4, 5, 10, 5, 5, 4, 3, 4, 3, 3, 4, 2, 2]
N_NUMERIC = 7
N_ROWS = 1000
PRIOR_VAR = 100.0
SEED = 20240607


def design(rng):
    cols = [np.ones(N_ROWS)]
    numeric = rng.gamma(2.0, 1.0, size=(N_ROWS, N_NUMERIC))
    numeric = (numeric - numeric.mean(0)) / numeric.std(0, ddof=1)
    cols.extend(numeric.T)
    for k in LEVELS:
        probs = rng.dirichlet(np.full(k, 2.0))
        codes = rng.choice(k, size=N_ROWS, p=probs)
        for level in range(1, k):
            cols.append((codes == level).astype(float))
    return np.column_stack(cols)


def mode_and_precision(X, y):
    theta = np.zeros(X.shape[1])
    for _ in range(100):
        p = 1.0 / (1.0 + np.exp(-X @ theta))
        grad = X.T @ (y - p) - theta / PRIOR_VAR
        prec = (X.T * (p * (1 - p))) @ X + np.eye(X.shape[1]) / PRIOR_VAR
        step = np.linalg.solve(prec, grad)
        theta += step
        if np.max(np.abs(grad)) < 1e-10:
            break
    p = 1.0 / (1.0 + np.exp(-X @ theta))
    prec = (X.T * (p * (1 - p))) @ X + np.eye(X.shape[1]) / PRIOR_VAR
    return theta, 0.5 * (prec + prec.T)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    rng = np.random.default_rng(SEED)
    X = design(rng)
    assert X.shape[1] == 49
    beta = rng.normal(0.0, 0.4, size=X.shape[1])
    beta[0] = -0.9
    y = (rng.uniform(size=N_ROWS) < 1.0 / (1.0 + np.exp(-X @ beta))).astype(float)
    mode, prec = mode_and_precision(X, y)
    np.savetxt(out / "credit_precision.csv", prec, delimiter=",", fmt="%.17g")
    np.savetxt(out / "credit_mean.csv", mode[None, :], delimiter=",", fmt="%.17g")


if __name__ == "__main__":
    main()

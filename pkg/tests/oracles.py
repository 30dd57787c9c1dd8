"""Independent reference computations that pin test expectations.

Everything here is written against numpy directly -- dense solves,
brute-force quadratic forms, textbook quadrature -- instead of going
through the package, so agreement between the two is evidence rather
than tautology.  The production code factors, normalizes, and truncates;
these oracles do none of that.
"""

import csv
import math
import statistics

import numpy as np


def se_gram(X, Y, lengthscale):
    """Squared-exponential Gram matrix exp(-|x-y|^2 / (2 l^2))."""
    X = np.asarray(X, dtype=float).reshape(len(X), -1)
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    d2 = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-d2 / (2.0 * lengthscale * lengthscale))


def dense_discounted_posterior(points, rewards, grid, eta, lam, lengthscale):
    """Discounted GP posterior over ``grid`` in the raw (nominal) weight form.

    Observation s out of t carries weight w_s = eta^{-s} and the ridge term
    is lam_t = lam * w_t, i.e. the linear system is
    (K + lam_t W^{-1}) solved directly, with no rescaling for overflow.
    Returns (means, variances) over the grid.
    """
    t = len(rewards)
    n = len(grid)
    if t == 0:
        return np.zeros(n), np.ones(n)
    w = eta ** (-np.arange(1, t + 1, dtype=float))
    A = se_gram(points, points, lengthscale) + (lam * w[-1]) * np.diag(1.0 / w)
    kx = se_gram(grid, points, lengthscale)  # (n, t)
    means = kx @ np.linalg.solve(A, np.asarray(rewards, dtype=float))
    variances = 1.0 - np.einsum("nt,tn->n", kx, np.linalg.solve(A, kx.T))
    return means, variances


def dense_double_weighted_gain(points, eta, lam, lengthscale):
    """Information gain of a point set in the raw double-weighted form.

    0.5 * logdet(I + B / (lam * w_t^2)) with B = diag(w) K diag(w) and
    w_s = eta^{-s}.  Overflows for long histories; fine at test sizes.
    """
    t = len(points)
    if t == 0:
        return 0.0
    w = eta ** (-np.arange(1, t + 1, dtype=float))
    K = se_gram(points, points, lengthscale)
    B = np.diag(w) @ K @ np.diag(w)
    sign, logdet = np.linalg.slogdet(np.eye(t) + B / (lam * w[-1] ** 2))
    assert sign > 0
    return 0.5 * logdet


def gauss_hermite(mbar):
    """Gauss-Hermite nodes and probabilists-normalized weights (sum 1)."""
    nodes, weights = np.polynomial.hermite.hermgauss(mbar)
    return nodes, weights / math.sqrt(math.pi)


def rkhs_norm_dense(alphas, centers, lengthscale):
    """sqrt(alpha^T K alpha) with the Gram matrix built from scratch."""
    a = np.asarray(alphas, dtype=float)
    K = se_gram(centers, centers, lengthscale)
    return math.sqrt(float(a @ K @ a))


def reaggregate(policy_csv_paths):
    """Recompute the aggregate table from per-policy CSV files.

    Returns {(t, policy): (mean_cum_regret, stderr)} using the stdlib csv
    and statistics modules only.  stderr is the sample standard deviation
    over seeds divided by sqrt(#seeds), 0.0 for a single seed.
    """
    by_key = {}
    for path in policy_csv_paths:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                key = (int(row["t"]), row["policy"])
                by_key.setdefault(key, []).append(float(row["cum_regret"]))
    out = {}
    for key, values in by_key.items():
        mean = statistics.fmean(values)
        err = statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0
        out[key] = (mean, err)
    return out

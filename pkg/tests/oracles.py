"""Slow, independent reference implementations used as test oracles.

Nothing here imports the package; these are the brute-force versions the
fast code is checked against.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f, lo, hi, tol=1e-11, max_iter=200):
    """Minimizer of a convex 1-D function on ``[lo, hi]`` by golden-section search."""
    a, b = lo, hi
    c = b - GOLD * (b - a)
    d = a + GOLD * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLD * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLD * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def lasso_objective(X, y, beta, lam):
    r = y - X @ beta
    return float(r @ r) / len(y) + lam * float(np.sum(np.abs(beta)))


def brute_force_lasso(X, y, lam):
    """Lasso for ``p <= 2`` by nested golden-section search over a box."""
    n, p = X.shape
    # any minimizer has lam*|b|_1 <= objective(0) = |y|^2/n
    if lam > 0:
        R = float(y @ y) / n / lam + 1.0
    else:
        R = 10.0 * (float(np.abs(np.linalg.lstsq(X, y, rcond=None)[0]).max()) + 1.0)
    if p == 1:
        b = golden_min(lambda t: lasso_objective(X, y, np.array([t]), lam), -R, R)
        return np.array([b])

    def inner(b1):
        b2 = golden_min(lambda t: lasso_objective(X, y, np.array([b1, t]), lam), -R, R)
        return b2, lasso_objective(X, y, np.array([b1, b2]), lam)

    b1 = golden_min(lambda t: inner(t)[1], -R, R)
    return np.array([b1, inner(b1)[0]])


def quantile_order_stat(vals, level):
    """``ceil(level * B)``-th smallest value, by sorting."""
    v = sorted(vals)
    B = len(v)
    k = math.ceil(level * B - 1e-9)
    return v[min(max(k, 1), B) - 1]


def brute_force_stepdown(t, draws, alpha):
    """Stepdown rejections, recomputing every subset quantile from scratch."""
    t = list(t)
    B = len(draws)
    active = set(range(len(t)))
    rejected = set()
    steps = 0
    while active:
        steps += 1
        c = quantile_order_stat([max(draws[b][j] for j in active) for b in range(B)], 1.0 - alpha)
        new = {j for j in active if t[j] > c}
        if not new:
            break
        rejected |= new
        active -= new
    return rejected, steps


def brute_force_adjusted_p(t, draws):
    """Stepdown-adjusted p-values from the definition over nested suffix sets."""
    p = len(t)
    B = len(draws)
    order = sorted(range(p), key=lambda j: -t[j])
    out = [0.0] * p
    worst = 0
    for k, j in enumerate(order):
        rest = order[k:]
        cnt = sum(1 for b in range(B) if max(draws[b][i] for i in rest) >= t[j])
        worst = max(worst, cnt)
        out[j] = (1.0 + worst) / (B + 1.0)
    return out


def enumerated_lasso(X, y, lam):
    """Exact Lasso minimizer for small ``p`` by enumerating supports and signs.

    On a fixed support ``S`` with signs ``s`` the objective is a quadratic
    whose stationary point solves ``X_S'X_S b / n = X_S'y / n - lam s / 2``.
    The global minimizer is one of the sign-consistent stationary points.
    """
    n, p = X.shape
    best, best_obj = np.zeros(p), lasso_objective(X, y, np.zeros(p), lam)
    for k in range(1, p + 1):
        for S in itertools.combinations(range(p), k):
            XS = X[:, S]
            G = XS.T @ XS / n
            for signs in itertools.product((-1.0, 1.0), repeat=k):
                s = np.array(signs)
                b = np.linalg.solve(G, XS.T @ y / n - lam * s / 2.0)
                if np.any(np.sign(b) != s):
                    continue
                beta = np.zeros(p)
                beta[list(S)] = b
                obj = lasso_objective(X, y, beta, lam)
                if obj < best_obj:
                    best, best_obj = beta, obj
    return best

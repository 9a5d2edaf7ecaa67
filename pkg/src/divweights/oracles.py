"""Independent reference computations used by the self-test and the test suite.

Nothing here calls the solver or the objective code in :mod:`divweights.core`;
objectives are re-evaluated from their plain formulas on explicit grids.
"""

from __future__ import annotations

import numpy as np


def random_instance(rng: np.random.Generator, n: int, k: int, op_scale: float = 3.0):
    """Log densities of ``k`` Gaussian forecasters on ``n`` standard-normal outcomes, plus random optimism."""
    y = rng.standard_normal(n)
    mu = rng.normal(0.0, 0.7, size=k)
    sd = rng.uniform(0.6, 1.8, size=k)
    z = (y[:, None] - mu[None, :]) / sd[None, :]
    L = -0.5 * np.log(2 * np.pi) - np.log(sd)[None, :] - 0.5 * z * z
    op = rng.uniform(0.0, op_scale, size=k)
    return L, op


def simplex_grid(k: int, step: float = 1e-3) -> np.ndarray:
    """All points of the simplex whose coordinates are multiples of ``step`` (k = 1, 2 or 3)."""
    m = int(round(1.0 / step))
    if k == 1:
        return np.ones((1, 1))
    if k == 2:
        a = np.arange(m + 1) / m
        return np.column_stack([a, 1.0 - a])
    if k == 3:
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        keep = i + j <= m
        i, j = i[keep], j[keep]
        return np.column_stack([i, j, m - i - j]) / m
    raise ValueError("grid oracle supports k <= 3")


def _xlogx(W: np.ndarray) -> np.ndarray:
    out = np.zeros_like(W)
    pos = W > 0
    out[pos] = W[pos] * np.log(W[pos])
    return out


def fit_term_on_grid(W: np.ndarray, L: np.ndarray, chunk: int = 20000) -> np.ndarray:
    """``-sum_i log sum_k W_gk exp(L_ik)`` for every grid row ``g``, by direct exponentiation."""
    D = np.exp(L)
    out = np.empty(W.shape[0])
    for s in range(0, W.shape[0], chunk):
        out[s:s + chunk] = -np.log(W[s:s + chunk] @ D.T).sum(axis=1)
    return out


def divergence_objective_on_grid(W, L, op, kind="kl", c=1.0, prior="optimism") -> np.ndarray:
    k = L.shape[1]
    if prior == "optimism":
        e = np.exp(-(op - op.min()))
        target = e / e.sum()
        linear = op
    else:
        target = np.full(k, 1.0 / k)
        linear = np.zeros(k)
    if kind == "kl":
        penalty = _xlogx(W).sum(axis=1) + W @ linear
    else:
        penalty = ((W - target) ** 2).sum(axis=1)
    return c * penalty + fit_term_on_grid(W, L)


def grid_minimum(values: np.ndarray, W: np.ndarray):
    g = int(np.argmin(values))
    return W[g], float(values[g])


def central_difference(f, w: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of ``f`` along each coordinate (f extended off the simplex)."""
    g = np.empty_like(w)
    for j in range(w.shape[0]):
        e = np.zeros_like(w)
        e[j] = h
        g[j] = (f(w + e) - f(w - e)) / (2 * h)
    return g


def plain_divergence_objective(w, L, op, kind="kl", c=1.0):
    """Objective with the optimism prior, off-simplex points allowed (for finite differences)."""
    w = np.asarray(w, dtype=float)
    fit = -np.sum(np.log(np.exp(L) @ w))
    if kind == "kl":
        return c * (np.sum(w * np.log(w)) + np.dot(w, op)) + fit
    e = np.exp(-(op - op.min()))
    return c * np.sum((w - e / e.sum()) ** 2) + fit

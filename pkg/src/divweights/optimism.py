"""Optimism estimates: K-fold cross-validation and the AICc penalty."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol, Sequence, Tuple

import numpy as np


class FittedPredictor(Protocol):
    def log_density(self, x: Any, y: float) -> float: ...

    def predictive_mean(self, x: Any) -> float: ...


class ModelAdapter(Protocol):
    """Anything with a deterministic ``fit(dataset) -> FittedPredictor``.

    Datasets are addressed by ``dataset.subset(indices)``, ``len(dataset)`` and
    ``dataset.point(i) -> (x, y)``. Adapters may also provide a vectorized
    ``log_densities(fitted, dataset) -> array`` shortcut.
    """

    def fit(self, dataset: Any) -> FittedPredictor: ...


class FitError(RuntimeError):
    def __init__(self, fold: int | None, cause: BaseException):
        where = "full data" if fold is None else f"fold {fold} complement"
        super().__init__(f"fit failed on {where}: {cause}")
        self.fold = fold


@dataclass(frozen=True)
class FoldPlan:
    n: int
    fold_of: np.ndarray
    n_folds: int = 5
    seed: int = 0
    stratified: bool = False

    def fold_indices(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == j)

    def complement_indices(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != j)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.fold_of, minlength=self.n_folds)


def make_folds(n: int, n_folds: int = 5, seed: int = 0, rng: np.random.Generator | None = None) -> FoldPlan:
    """Seeded random permutation cut into contiguous blocks.

    The first ``n % n_folds`` folds get one extra element. Passing ``rng``
    draws the permutation from that generator instead of ``seed``.
    """
    if n_folds < 2:
        raise ValueError("need at least two folds")
    if n < n_folds:
        raise ValueError(f"cannot split {n} observations into {n_folds} folds")
    gen = rng if rng is not None else np.random.default_rng(seed)
    perm = gen.permutation(n)
    base, extra = divmod(n, n_folds)
    sizes = [base + (1 if j < extra else 0) for j in range(n_folds)]
    fold_of = np.empty(n, dtype=np.int64)
    start = 0
    for j, size in enumerate(sizes):
        fold_of[perm[start:start + size]] = j
        start += size
    fold_of.setflags(write=False)
    return FoldPlan(n=n, fold_of=fold_of, n_folds=n_folds, seed=seed)


def _score(adapter, fitted, dataset) -> np.ndarray:
    shortcut = getattr(adapter, "log_densities", None)
    if shortcut is not None:
        return np.asarray(shortcut(fitted, dataset), dtype=float)
    return np.array([fitted.log_density(*dataset.point(i)) for i in range(len(dataset))], dtype=float)


@dataclass(frozen=True)
class CVResult:
    optimism: float
    full_fit: np.ndarray
    heldout: np.ndarray

    @property
    def cv_deviance(self) -> float:
        return -float(self.heldout.sum())

    @property
    def in_sample_deviance(self) -> float:
        return -float(self.full_fit.sum())


def cross_validate(adapter: ModelAdapter, dataset, plan: FoldPlan) -> CVResult:
    """Full-fit and held-out pointwise log densities plus the optimism estimate."""
    if len(dataset) != plan.n:
        raise ValueError(f"fold plan covers {plan.n} points, dataset has {len(dataset)}")
    try:
        full = adapter.fit(dataset)
    except Exception as exc:
        raise FitError(None, exc) from exc
    full_fit = _score(adapter, full, dataset)
    heldout = np.empty(plan.n)
    for j in range(plan.n_folds):
        test_idx = plan.fold_indices(j)
        try:
            fitted = adapter.fit(dataset.subset(plan.complement_indices(j)))
        except Exception as exc:
            raise FitError(j, exc) from exc
        heldout[test_idx] = _score(adapter, fitted, dataset.subset(test_idx))
    optimism = -float(heldout.sum()) + float(full_fit.sum())
    full_fit.setflags(write=False)
    heldout.setflags(write=False)
    return CVResult(optimism=optimism, full_fit=full_fit, heldout=heldout)


def cv_optimism(adapter: ModelAdapter, dataset, plan: FoldPlan) -> Tuple[float, np.ndarray]:
    """Cross-validated optimism and the full-fit log-density column."""
    res = cross_validate(adapter, dataset, plan)
    return res.optimism, res.full_fit


def cv_optimism_many(adapters: Sequence[ModelAdapter], dataset, plan: FoldPlan) -> list[CVResult]:
    """One shared fold plan across all models; models are processed independently."""
    return [cross_validate(a, dataset, plan) for a in adapters]


def aicc_penalty(num_params: int, n: int) -> float:
    """Small-sample corrected AIC penalty ``c + c(c+1)/(n-c-1)``."""
    c = num_params
    if n <= c + 1:
        raise ValueError(f"AICc penalty undefined for n={n} <= c+1={c + 1}")
    return c + c * (c + 1) / (n - c - 1)

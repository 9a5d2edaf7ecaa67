"""Gaussian linear-regression models and the simulated data-generating processes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

SIGMA_FLOOR = 1e-6
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)
CORRELATION = 0.5
TEST_SIZE = 200


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class RegressionDataset:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"design {X.shape} does not match response length {y.shape[0]}")
        if np.isnan(X).any() or np.isnan(y).any():
            raise ValueError("dataset contains NaN")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.shape[0]

    def subset(self, idx) -> "RegressionDataset":
        return RegressionDataset(self.X[idx], self.y[idx])

    def point(self, i: int):
        return self.X[i], float(self.y[i])


@dataclass(frozen=True)
class DgpConfig:
    p: int = 20
    beta_sd: float = 0.5
    alpha_sd: float = 2.0
    noise_sd: float = 5.0
    sparse: bool = False
    correlated: bool = False
    error_kind: str = "gaussian"

    def __post_init__(self):
        if min(self.beta_sd, self.alpha_sd, self.noise_sd) <= 0:
            raise ValueError("standard deviations must be positive")
        if self.error_kind not in ("gaussian", "student_t3"):
            raise ValueError(f"unknown error kind {self.error_kind!r}")


SCENARIOS = {
    "nonsparse_indep": dict(sparse=False, correlated=False),
    "nonsparse_corr": dict(sparse=False, correlated=True),
    "sparse_indep": dict(sparse=True, correlated=False),
    "sparse_corr": dict(sparse=True, correlated=True),
}


def scenario_config(name: str, error_kind: str = "gaussian", **overrides) -> DgpConfig:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return DgpConfig(error_kind=error_kind, **SCENARIOS[name], **overrides)


@dataclass(frozen=True)
class GroundTruth:
    beta: np.ndarray
    alpha: float
    config: DgpConfig


def generate_ground_truth(cfg: DgpConfig, seed=None) -> GroundTruth:
    """beta_j ~ N(0, beta_sd^2), alpha ~ N(0, alpha_sd^2); sparse zeroes a random half of beta."""
    rng = _rng(seed)
    beta = rng.normal(0.0, cfg.beta_sd, size=cfg.p)
    alpha = float(rng.normal(0.0, cfg.alpha_sd))
    if cfg.sparse:
        beta[rng.choice(cfg.p, size=cfg.p // 2, replace=False)] = 0.0
    beta.setflags(write=False)
    return GroundTruth(beta=beta, alpha=alpha, config=cfg)


def sample_design(p: int, n: int, correlated: bool, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, p))
    if not correlated:
        return z
    # one common factor: unit variance, pairwise correlation 0.5
    g = rng.standard_normal((n, 1))
    return np.sqrt(CORRELATION) * g + np.sqrt(1.0 - CORRELATION) * z


def sample_dataset(truth: GroundTruth, n: int, seed=None) -> RegressionDataset:
    if n < 1:
        raise ValueError("need at least one observation")
    cfg = truth.config
    rng = _rng(seed)
    X = sample_design(cfg.p, n, cfg.correlated, rng)
    if cfg.error_kind == "gaussian":
        eps = rng.normal(0.0, cfg.noise_sd, size=n)
    else:
        eps = cfg.noise_sd * rng.standard_t(3, size=n)
    return RegressionDataset(X, X @ truth.beta + truth.alpha + eps)


@dataclass(frozen=True)
class ModelSpace:
    subsets: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.subsets) < 1:
            raise ValueError("model space needs at least one model")

    @property
    def k(self) -> int:
        return len(self.subsets)


def build_model_space(p: int, k: int = 10, seed=None, max_size: int = 5) -> ModelSpace:
    """Each model: size m uniform on 1..max_size, then m distinct predictors. Duplicates allowed."""
    if p < max_size:
        raise ValueError(f"need at least {max_size} predictors, got {p}")
    rng = _rng(seed)
    subsets = []
    for _ in range(k):
        m = int(rng.integers(1, max_size + 1))
        subsets.append(tuple(int(j) for j in rng.choice(p, size=m, replace=False)))
    return ModelSpace(tuple(subsets))


@dataclass(frozen=True)
class GaussianLinearModel:
    predictor_subset: Tuple[int, ...]
    beta_hat: np.ndarray
    alpha_hat: float
    sigma_hat: float

    def mean(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if not self.predictor_subset:
            return np.full(X.shape[0], self.alpha_hat)
        return self.alpha_hat + X[:, list(self.predictor_subset)] @ self.beta_hat

    def log_densities(self, X: np.ndarray, y: np.ndarray) -> np.ndarray:
        r = (np.asarray(y, dtype=float) - self.mean(X)) / self.sigma_hat
        return -HALF_LOG_2PI - np.log(self.sigma_hat) - 0.5 * r * r

    def predictive_mean(self, x) -> float:
        return float(self.mean(np.asarray(x, dtype=float).reshape(1, -1))[0])

    def log_density(self, x, y: float) -> float:
        return float(self.log_densities(np.asarray(x, dtype=float).reshape(1, -1), np.array([y]))[0])


def fit_mle(data: RegressionDataset, subset: Sequence[int]) -> GaussianLinearModel:
    """Least squares with intercept; minimum-norm solution when rank deficient.

    ``sigma_hat`` is the MLE ``sqrt(RSS / n)``, floored at ``SIGMA_FLOOR``.
    """
    n = len(data)
    if n < 1:
        raise ValueError("cannot fit an empty dataset")
    subset = tuple(int(j) for j in subset)
    if len(set(subset)) != len(subset):
        raise ValueError("predictor subset has duplicates")
    A = np.column_stack([np.ones(n), data.X[:, list(subset)]])
    coef, *_ = np.linalg.lstsq(A, data.y, rcond=None)
    resid = data.y - A @ coef
    sigma = max(float(np.sqrt(resid @ resid / n)), SIGMA_FLOOR)
    beta = coef[1:].copy()
    beta.setflags(write=False)
    return GaussianLinearModel(subset, beta, float(coef[0]), sigma)


def log_density(model: GaussianLinearModel, x, y: float) -> float:
    return model.log_density(x, y)


@dataclass(frozen=True)
class SubsetAdapter:
    """Model adapter fitting a Gaussian linear model on a fixed predictor subset."""

    subset: Tuple[int, ...]

    def fit(self, data: RegressionDataset) -> GaussianLinearModel:
        return fit_mle(data, self.subset)

    def log_densities(self, model: GaussianLinearModel, data: RegressionDataset) -> np.ndarray:
        return model.log_densities(data.X, data.y)


def mixture_rmse(w, models: Sequence[GaussianLinearModel], test: RegressionDataset) -> float:
    """RMSE of the weighted mean prediction ``sum_k w_k mu_k(x)``."""
    if len(test) == 0:
        raise ValueError("empty test set")
    w = np.asarray(w, dtype=float)
    if w.shape[0] != len(models):
        raise ValueError(f"{w.shape[0]} weights for {len(models)} models")
    means = np.column_stack([m.mean(test.X) for m in models])
    err = test.y - means @ w
    return float(np.sqrt(np.mean(err * err)))

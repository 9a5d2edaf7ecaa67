"""Weighting objectives, weighting methods and diagnostics.

Every function works on natural-log predictive densities. Mixtures over
models are evaluated with a per-row max shift so that very negative log
densities never underflow to ``log(0)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from .solver import SolverConfig, SolverReport, minimize_on_simplex

SIMPLEX_ATOL = 1e-12


class DimensionError(ValueError):
    """Inputs disagree on the number of models or observations."""


@dataclass(frozen=True)
class LogDensityMatrix:
    """An n-by-K table of pointwise log predictive densities.

    Row ``i`` holds ``log p_k(y_i)`` for every model ``k``.
    """

    values: np.ndarray
    model_labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1) if values.size else values.reshape(0, 1)
        if values.ndim != 2:
            raise DimensionError("log-density matrix must be two-dimensional")
        if values.shape[1] < 1:
            raise DimensionError("log-density matrix needs at least one model column")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f"non-finite log density at row {bad[0]}, column {bad[1]}")
        values.setflags(write=False)
        labels = tuple(self.model_labels) or tuple(f"model_{k}" for k in range(values.shape[1]))
        if len(labels) != values.shape[1]:
            raise DimensionError(f"{len(labels)} labels for {values.shape[1]} columns")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "model_labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]


MatrixLike = Union[LogDensityMatrix, np.ndarray, Sequence[Sequence[float]]]


@dataclass(frozen=True)
class PenaltyConfig:
    """Penalty applied to the weights: ``kind`` is "kl" or "brier", ``scale_c`` its
    multiplier, ``prior`` one of "optimism", "uniform" or an explicit weight vector."""

    kind: str = "kl"
    scale_c: float = 1.0
    prior: Union[str, np.ndarray] = "optimism"

    def __post_init__(self):
        if self.kind not in ("kl", "brier"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if not self.scale_c > 0:
            raise ValueError("scale_c must be positive")
        if isinstance(self.prior, str):
            if self.prior not in ("optimism", "uniform"):
                raise ValueError(f"unknown prior {self.prior!r}")
        else:
            prior = check_simplex(self.prior)
            if self.kind == "kl" and np.any(prior <= 0):
                raise ValueError("explicit prior must be strictly positive under the KL penalty")
            object.__setattr__(self, "prior", prior)


@dataclass(frozen=True)
class DiagnosticsReport:
    jensen_gap_out: float
    jensen_gap_in: float
    overfit_ratios: np.ndarray
    min_overfit_ratio: float


def _values(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, LogDensityMatrix):
        return matrix.values
    return LogDensityMatrix(matrix).values


def _vector(x, k: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    if k is not None and v.shape[0] != k:
        raise DimensionError(f"{name} has length {v.shape[0]}, expected {k}")
    return v


def check_simplex(w, k: int | None = None) -> np.ndarray:
    """Validate and return ``w`` as a float array on the probability simplex."""
    w = _vector(w, k, "weights")
    if np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to one")
    return w


def _softmax_neg(scores: np.ndarray) -> np.ndarray:
    z = -scores
    z = np.exp(z - z.max())
    return z / z.sum()


def optimism_prior(op) -> np.ndarray:
    """Prior weights ``exp(-op_k) / sum_j exp(-op_j)``."""
    return _softmax_neg(_vector(op, name="optimism"))


def negative_exponentiated_weights(scores) -> np.ndarray:
    """Weights proportional to ``exp(-score)``; shift invariant in the scores.

    With ``scores = deviance + optimism`` these are Akaike-style weights.
    """
    return _softmax_neg(_vector(scores, name="scores"))


def deviances(matrix: MatrixLike) -> np.ndarray:
    """Per-model negative log score ``-sum_i L_ik``."""
    return -_values(matrix).sum(axis=0)


def model_selection_index(matrix: MatrixLike, op) -> int:
    """Index minimizing deviance plus optimism. Exact ties go to the lowest index."""
    values = _values(matrix)
    if values.shape[0] < 1:
        raise DimensionError("model selection needs at least one observation")
    op = _vector(op, values.shape[1], "optimism")
    # np.argmin returns the first occurrence of the minimum
    return int(np.argmin(-values.sum(axis=0) + op))


def log_mixture(w: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Row-wise ``log sum_k w_k exp(L_ik)`` via max shift; zero weights are skipped."""
    with np.errstate(divide="ignore"):
        a = values + np.log(w)
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True))).ravel()


def _entropy_term(w: np.ndarray) -> float:
    pos = w > 0
    return float(np.sum(w[pos] * np.log(w[pos])))


def _prior_vectors(op: np.ndarray, cfg: PenaltyConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Return (linear KL coefficients, Brier target) for the configured prior."""
    k = op.shape[0]
    if isinstance(cfg.prior, str):
        if cfg.prior == "optimism":
            return op, optimism_prior(op)
        return np.zeros(k), np.full(k, 1.0 / k)
    prior = check_simplex(cfg.prior, k)
    with np.errstate(divide="ignore"):
        return -np.log(prior), prior


def divergence_objective(w, matrix: MatrixLike, op, cfg: PenaltyConfig | None = None) -> float:
    """Penalized negative log mixture likelihood.

    KL kind: ``c * (sum w log w + sum w op) - sum_i log sum_k w_k exp(L_ik)``,
    which drops the constant ``c * log sum exp(-op)``. Brier kind:
    ``c * ||w - w_op||^2`` minus the same fit term.
    """
    cfg = cfg or PenaltyConfig()
    values = _values(matrix)
    k = values.shape[1]
    w = _vector(w, k, "weights")
    op = _vector(op, k, "optimism")
    linear, target = _prior_vectors(op, cfg)
    if cfg.kind == "kl":
        pos = w > 0
        penalty = _entropy_term(w) + float(np.dot(w[pos], linear[pos]))
    else:
        penalty = float(np.sum((w - target) ** 2))
    fit = -float(log_mixture(w, values).sum()) if values.shape[0] else 0.0
    result = cfg.scale_c * penalty + fit
    if not np.isfinite(result):
        raise FloatingPointError("divergence objective is not finite")
    return result


def _fit_gradient(w: np.ndarray, values: np.ndarray) -> np.ndarray:
    if values.shape[0] == 0:
        return np.zeros(values.shape[1])
    lm = log_mixture(w, values)
    return -np.exp(values - lm[:, None]).sum(axis=0)


def divergence_objective_gradient(w, matrix: MatrixLike, op, cfg: PenaltyConfig | None = None) -> np.ndarray:
    cfg = cfg or PenaltyConfig()
    values = _values(matrix)
    k = values.shape[1]
    w = _vector(w, k, "weights")
    op = _vector(op, k, "optimism")
    linear, target = _prior_vectors(op, cfg)
    if cfg.kind == "kl":
        if np.any(w <= 0):
            raise ValueError("KL gradient is only defined for strictly positive weights")
        penalty_grad = np.log(w) + 1.0 + linear
    else:
        penalty_grad = 2.0 * (w - target)
    return cfg.scale_c * penalty_grad + _fit_gradient(w, values)


def _divergence_oracle(values: np.ndarray, op: np.ndarray, cfg: PenaltyConfig):
    linear, target = _prior_vectors(op, cfg)
    c = cfg.scale_c
    n = values.shape[0]

    def oracle(w):
        if n:
            lm = log_mixture(w, values)
            fit = -float(lm.sum())
            fit_grad = -np.exp(values - lm[:, None]).sum(axis=0)
        else:
            fit, fit_grad = 0.0, np.zeros_like(w)
        if cfg.kind == "kl":
            logw = np.log(w)
            value = c * float(np.dot(w, logw + linear)) + fit
            grad = c * (logw + 1.0 + linear) + fit_grad
        else:
            d = w - target
            value = c * float(np.dot(d, d)) + fit
            grad = 2.0 * c * d + fit_grad
        return value, grad

    return oracle


def _resolve_start(solver: SolverConfig, prior_point: np.ndarray) -> SolverConfig:
    if isinstance(solver.initial_point, str) and solver.initial_point == "prior":
        return SolverConfig(solver.tolerance, solver.max_iterations, prior_point, solver.floor)
    return solver


def divergence_weights(
    matrix: MatrixLike,
    op,
    cfg: PenaltyConfig | None = None,
    solver: SolverConfig | None = None,
) -> Tuple[np.ndarray, SolverReport]:
    """Divergence-based weights: minimize :func:`divergence_objective` on the simplex."""
    cfg = cfg or PenaltyConfig()
    solver = solver or SolverConfig()
    values = _values(matrix)
    op = _vector(op, values.shape[1], "optimism")
    _, target = _prior_vectors(op, cfg)
    oracle = _divergence_oracle(values, op, cfg)
    return minimize_on_simplex(oracle, values.shape[1], _resolve_start(solver, target))


def stacking_weights(heldout: MatrixLike, solver: SolverConfig | None = None) -> Tuple[np.ndarray, SolverReport]:
    """Stacking with the log score on pooled held-out log densities.

    Flat directions (e.g. duplicated columns) resolve to the point the solver
    reaches from the uniform start, which keeps duplicates equally weighted.
    """
    solver = solver or SolverConfig()
    values = _values(heldout)
    if values.shape[0] < 1:
        raise DimensionError("stacking needs at least one held-out observation")

    def oracle(w):
        lm = log_mixture(w, values)
        return -float(lm.sum()), -np.exp(values - lm[:, None]).sum(axis=0)

    k = values.shape[1]
    return minimize_on_simplex(oracle, k, _resolve_start(solver, np.full(k, 1.0 / k)))


def new_weights(matrix: MatrixLike, op) -> np.ndarray:
    """Negative exponentiated weights on deviance plus optimism."""
    values = _values(matrix)
    op = _vector(op, values.shape[1], "optimism")
    return negative_exponentiated_weights(-values.sum(axis=0) + op)


def exponentiated_objective(w, prior, scores) -> float:
    """``sum w log(w / prior) + sum w * scores``, whose minimizer is ``softmax(log prior - scores)``."""
    w = _vector(w, name="weights")
    prior = check_simplex(prior, w.shape[0])
    scores = _vector(scores, w.shape[0], "scores")
    pos = w > 0
    return float(np.sum(w[pos] * (np.log(w[pos]) - np.log(prior[pos]))) + np.dot(w, scores))


def mixture_log_score(w, matrix: MatrixLike) -> float:
    """Mean negative log density of the weighted mixture."""
    values = _values(matrix)
    if values.shape[0] < 1:
        raise DimensionError("log score needs at least one observation")
    w = _vector(w, values.shape[1], "weights")
    return -float(log_mixture(w, values).mean())


def _jensen_gap(w: np.ndarray, values: np.ndarray) -> float:
    if values.shape[0] == 0:
        return 0.0
    pos = w > 0
    if pos.sum() == 1:
        return 0.0
    gap = -(values[:, pos] @ w[pos]) + log_mixture(w, values)
    return float(gap.sum())


def diagnostics(w, train: MatrixLike, test: MatrixLike) -> DiagnosticsReport:
    """Out-of-sample and in-sample Jensen gaps plus per-model overfit ratios.

    The overfit ratio of model k is its test deviance divided by its train
    deviance; a nonpositive train deviance raises ``ValueError``.
    """
    train_v = _values(train)
    test_v = _values(test)
    if train_v.shape[1] != test_v.shape[1]:
        raise DimensionError("train and test matrices have different model counts")
    w = check_simplex(w, train_v.shape[1])
    labels = train.model_labels if isinstance(train, LogDensityMatrix) else None
    train_dev = -train_v.sum(axis=0)
    for k, d in enumerate(train_dev):
        if not d > 0:
            name = labels[k] if labels else f"model {k}"
            raise ValueError(f"in-sample deviance of {name} is {d!r}; overfit ratio needs it positive")
    ratios = -test_v.sum(axis=0) / train_dev
    ratios.setflags(write=False)
    return DiagnosticsReport(
        jensen_gap_out=_jensen_gap(w, test_v),
        jensen_gap_in=_jensen_gap(w, train_v),
        overfit_ratios=ratios,
        min_overfit_ratio=float(ratios.min()),
    )

"""Seeded Monte-Carlo harness for the linear-regression weighting experiments.

All randomness for replication ``r`` flows from ``base_seed + r``; the
individual streams (truth, model space, training data, test data, folds) are
independent children keyed by name and sample size, so results do not depend
on the order or process in which replications run.
"""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    PenaltyConfig,
    divergence_weights,
    log_mixture,
    mixture_log_score,
    new_weights,
    stacking_weights,
)
from .optimism import cross_validate, make_folds
from .simulation import (
    SCENARIOS,
    TEST_SIZE,
    GroundTruth,
    ModelSpace,
    SubsetAdapter,
    build_model_space,
    generate_ground_truth,
    mixture_rmse,
    sample_dataset,
    scenario_config,
)
from .solver import SolverConfig

METHODS = ("dw", "stack", "new")
DEFAULT_N_GRID = (10, 25, 50, 100, 150, 200)
N_FOLDS = 5

RECORD_FIELDS = (
    "scenario", "n", "replication", "method", "rmse", "mean_log_score",
    "weights", "seed", "solver_converged",
)
ROBUSTNESS_FIELDS = RECORD_FIELDS + ("penalty_kind", "c", "prior_kind", "error_kind")

_STREAMS = {"truth": 0, "space": 1, "train": 2, "test": 3, "folds": 4, "holdout": 5}


def stream(seed: int, name: str, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_STREAMS[name], *key)))


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple = ("nonsparse_indep",)
    n_grid: tuple = DEFAULT_N_GRID
    replications: int = 200
    test_size: int = TEST_SIZE
    base_seed: int = 0
    methods: tuple = METHODS
    num_models: int = 10
    error_kind: str = "gaussian"
    c_values: tuple = (1.0,)
    penalties: tuple = ("kl",)
    priors: tuple = ("optimism",)
    error_kinds: tuple = ("gaussian",)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if any(n < 10 for n in self.n_grid):
            raise ValueError("sample sizes must be at least 10")
        for s in self.scenarios:
            if s not in SCENARIOS:
                raise ValueError(f"unknown scenario {s!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")


@dataclass
class FittedReplication:
    """Everything the weighting methods need from one simulated dataset."""

    models: list
    train_matrix: np.ndarray
    heldout_matrix: np.ndarray
    optimism: np.ndarray
    test: object
    test_matrix: np.ndarray


def fit_models(space: ModelSpace, train, test, fold_rng: np.random.Generator) -> FittedReplication:
    plan = make_folds(len(train), N_FOLDS, rng=fold_rng)
    adapters = [SubsetAdapter(s) for s in space.subsets]
    results = [cross_validate(a, train, plan) for a in adapters]
    models = [a.fit(train) for a in adapters]
    return FittedReplication(
        models=models,
        train_matrix=np.column_stack([r.full_fit for r in results]),
        heldout_matrix=np.column_stack([r.heldout for r in results]),
        optimism=np.array([r.optimism for r in results]),
        test=test,
        test_matrix=np.column_stack([m.log_densities(test.X, test.y) for m in models]),
    )


def compute_weights(fit: FittedReplication, method: str, penalty: PenaltyConfig | None = None,
                    solver: SolverConfig | None = None):
    """Return ``(weights, converged)`` for one method."""
    if method == "dw":
        w, rep = divergence_weights(fit.train_matrix, fit.optimism, penalty or PenaltyConfig(), solver)
        return w, rep.converged
    if method == "stack":
        w, rep = stacking_weights(fit.heldout_matrix, solver)
        return w, rep.converged
    if method == "new":
        return new_weights(fit.train_matrix, fit.optimism), True
    raise ValueError(f"unknown method {method!r}")


def _record(scenario, n, r, method, seed, fit, w, converged) -> dict:
    return {
        "scenario": scenario,
        "n": n,
        "replication": r,
        "method": method,
        "rmse": mixture_rmse(w, fit.models, fit.test),
        "mean_log_score": mixture_log_score(w, fit.test_matrix),
        "weights": w,
        "seed": seed,
        "solver_converged": converged,
    }


def simulate_replication(scenario: str, n: int, r: int, cfg: ExperimentConfig,
                         error_kind: str | None = None) -> FittedReplication:
    seed = cfg.base_seed + r
    dgp = scenario_config(scenario, error_kind or cfg.error_kind)
    truth = generate_ground_truth(dgp, stream(seed, "truth"))
    space = build_model_space(dgp.p, cfg.num_models, stream(seed, "space"))
    train = sample_dataset(truth, n, stream(seed, "train", n))
    test = sample_dataset(truth, cfg.test_size, stream(seed, "test", n))
    return fit_models(space, train, test, stream(seed, "folds", n))


def _simulate_task(args) -> list:
    scenario, n, r, cfg = args
    fit = simulate_replication(scenario, n, r, cfg)
    out = []
    for method in cfg.methods:
        w, ok = compute_weights(fit, method)
        out.append(_record(scenario, n, r, method, cfg.base_seed + r, fit, w, ok))
    return out


def _robustness_task(args) -> list:
    scenario, n, r, error_kind, cfg = args
    fit = simulate_replication(scenario, n, r, cfg, error_kind)
    seed = cfg.base_seed + r
    out = []
    for penalty, c, prior in itertools.product(cfg.penalties, cfg.c_values, cfg.priors):
        w, ok = compute_weights(fit, "dw", PenaltyConfig(kind=penalty, scale_c=c, prior=prior))
        rec = _record(scenario, n, r, "dw", seed, fit, w, ok)
        rec.update(penalty_kind=penalty, c=c, prior_kind=prior, error_kind=error_kind)
        out.append(rec)
    for method in cfg.methods:
        if method == "dw":
            continue
        w, ok = compute_weights(fit, method)
        rec = _record(scenario, n, r, method, seed, fit, w, ok)
        rec.update(penalty_kind="", c="", prior_kind="", error_kind=error_kind)
        out.append(rec)
    return out


def _run(task, items: list, jobs: int) -> list:
    if jobs <= 1:
        results = map(task, items)
        return [rec for chunk in results for rec in chunk]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [rec for chunk in pool.map(task, items, chunksize=max(1, len(items) // (4 * jobs))) for rec in chunk]


def _method_rank(m: str) -> int:
    return METHODS.index(m)


def run_simulation(cfg: ExperimentConfig, jobs: int = 1) -> list:
    items = [(s, n, r, cfg) for s in cfg.scenarios for n in cfg.n_grid for r in range(cfg.replications)]
    records = _run(_simulate_task, items, jobs)
    records.sort(key=lambda d: (d["scenario"], d["n"], d["replication"], _method_rank(d["method"])))
    return records


def run_robustness(cfg: ExperimentConfig, jobs: int = 1) -> list:
    items = [(s, n, r, e, cfg) for e in cfg.error_kinds for s in cfg.scenarios
             for n in cfg.n_grid for r in range(cfg.replications)]
    records = _run(_robustness_task, items, jobs)

    def key(d):
        return (d["error_kind"], d["scenario"], d["n"], d["replication"], _method_rank(d["method"]),
                d["penalty_kind"], str(d["c"]), d["prior_kind"])

    records.sort(key=key)
    return records


def _cell(value) -> str:
    if isinstance(value, np.ndarray):
        return ";".join(fmt(x) for x in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def write_records(records: Iterable[dict], fields: Sequence[str], handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(fields)
    for rec in records:
        writer.writerow([_cell(rec[f]) for f in fields])


def records_to_csv(records: Iterable[dict], fields: Sequence[str] = RECORD_FIELDS) -> str:
    buf = io.StringIO()
    write_records(records, fields, buf)
    return buf.getvalue()


# ---------------------------------------------------------------- stability


def _stability_task(args) -> dict:
    truth, space, n, r, cfg = args
    train = sample_dataset(truth, n, stream(cfg.base_seed, "train", n, r))
    test = sample_dataset(truth, cfg.test_size, stream(cfg.base_seed, "test", n, r))
    fit = fit_models(space, train, test, stream(cfg.base_seed, "folds", n, r))
    return {(n, m): compute_weights(fit, m)[0] for m in cfg.methods}


def run_stability(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Across-replication sd of each weight component, averaged over components.

    Ground truth and model space are fixed by ``base_seed`` (first scenario);
    only the data vary between replications.
    """
    dgp = scenario_config(cfg.scenarios[0], cfg.error_kind)
    truth = generate_ground_truth(dgp, stream(cfg.base_seed, "truth"))
    space = build_model_space(dgp.p, cfg.num_models, stream(cfg.base_seed, "space"))
    items = [(truth, space, n, r, cfg) for n in cfg.n_grid for r in range(cfg.replications)]
    if jobs <= 1:
        chunks = list(map(_stability_task, items))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_stability_task, items, chunksize=max(1, len(items) // (4 * jobs))))
    rows = []
    for n in cfg.n_grid:
        for m in cfg.methods:
            W = np.array([c[(n, m)] for c in chunks if (n, m) in c])
            rows.append({
                "scenario": cfg.scenarios[0],
                "method": m,
                "n": n,
                "replications": cfg.replications,
                "mean_weight_sd": float(W.std(axis=0).mean()),
            })
    return rows


STABILITY_FIELDS = ("scenario", "method", "n", "replications", "mean_weight_sd")


# -------------------------------------------------------------- convergence

CONVERGENCE_N_GRID = (50, 200, 800)
HOLDOUT_SIZE = 10000


def convergence_gap(fit: FittedReplication, holdout_matrix: np.ndarray) -> dict:
    """Per-observation gap between the empirical objective and its holdout target.

    Uses the dw-optimal weights; the empirical objective is
    ``sum w log w + sum w op - sum_i log mix_i``.
    """
    n = fit.train_matrix.shape[0]
    w, rep = divergence_weights(fit.train_matrix, fit.optimism)
    pos = w > 0
    entropy = float(np.sum(w[pos] * np.log(w[pos])))
    opt_term = float(np.dot(w, fit.optimism))
    fit_term = -float(log_mixture(w, fit.train_matrix).sum())
    target = -float(log_mixture(w, holdout_matrix).mean())
    return {
        "gap": abs(entropy + opt_term + fit_term - n * target) / n,
        "entropy_term": abs(entropy) / n,
        "optimism_term": opt_term / n,
        "converged": rep.converged,
    }


def _convergence_task(args) -> dict:
    truth, space, n, r, cfg = args
    train = sample_dataset(truth, n, stream(cfg.base_seed, "train", n, r))
    holdout = sample_dataset(truth, HOLDOUT_SIZE, stream(cfg.base_seed, "holdout", n, r))
    fit = fit_models(space, train, holdout, stream(cfg.base_seed, "folds", n, r))
    out = convergence_gap(fit, fit.test_matrix)
    out.update(n=n, replication=r)
    return out


def run_convergence(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Median gap statistic over replications for each n, with a fixed truth and model space."""
    dgp = scenario_config(cfg.scenarios[0], cfg.error_kind)
    truth = generate_ground_truth(dgp, stream(cfg.base_seed, "truth"))
    space = build_model_space(dgp.p, cfg.num_models, stream(cfg.base_seed, "space"))
    items = [(truth, space, n, r, cfg) for n in cfg.n_grid for r in range(cfg.replications)]
    if jobs <= 1:
        per_rep = list(map(_convergence_task, items))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_rep = list(pool.map(_convergence_task, items, chunksize=max(1, len(items) // (4 * jobs))))
    rows = []
    for n in cfg.n_grid:
        reps = [d for d in per_rep if d["n"] == n]
        rows.append({
            "n": n,
            "replications": len(reps),
            "median_gap": float(np.median([d["gap"] for d in reps])),
            "median_entropy_term": float(np.median([d["entropy_term"] for d in reps])),
            "max_entropy_term": float(max(d["entropy_term"] for d in reps)),
            "all_converged": all(d["converged"] for d in reps),
        })
    return rows


CONVERGENCE_FIELDS = ("n", "replications", "median_gap", "median_entropy_term", "max_entropy_term", "all_converged")

"""Quick numerical self-check: grid oracle, boundary condition, gradient, convexity."""

from __future__ import annotations

import time
from typing import Callable, List, Tuple

import numpy as np

from . import core
from .oracles import (
    central_difference,
    divergence_objective_on_grid,
    grid_minimum,
    plain_divergence_objective,
    random_instance,
    simplex_grid,
)

BUDGET_SECONDS = 60.0
GRID_TOL = 2e-3
GRID_OBJ_SLACK = 1e-6
FD_TOL = 1e-6
CONVEXITY_SLACK = 1e-10

SuiteResult = Tuple[bool, str]


def grid_oracle_suite(seed: int = 11, instances: int = 5) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        for k, n in ((2, 30), (3, 20)):
            L, op = random_instance(rng, n, k)
            W = simplex_grid(k, 1e-3)
            w_grid, best = grid_minimum(divergence_objective_on_grid(W, L, op), W)
            w, rep = core.divergence_weights(L, op)
            obj = core.divergence_objective(w, L, op)
            err = float(np.max(np.abs(w - w_grid)))
            worst = max(worst, err)
            if not rep.converged or err > GRID_TOL or obj > best + GRID_OBJ_SLACK:
                return False, f"k={k}: distance {err:.2e} to grid minimizer, objective gap {obj - best:.2e}"
    return True, f"max distance to grid minimizer {worst:.2e}"


def boundary_condition_suite(seed: int = 12, instances: int = 50) -> SuiteResult:
    rng = np.random.default_rng(seed)
    for t in range(instances):
        L, op = random_instance(rng, 15, 4)
        vertex_values = [core.divergence_objective(np.eye(4)[j], L, op) for j in range(4)]
        if int(np.argmin(vertex_values)) != core.model_selection_index(L, op):
            return False, f"instance {t}: vertex argmin disagrees with selection criterion"
    return True, f"{instances}/{instances} vertex minimizers match the selection criterion"


def gradient_suite(seed: int = 13, instances: int = 5, points: int = 20,
                   gradient: Callable | None = None) -> SuiteResult:
    gradient = gradient or core.divergence_objective_gradient
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        L, op = random_instance(rng, 20, 3)
        for kind in ("kl", "brier"):
            cfg = core.PenaltyConfig(kind=kind)
            for _ in range(points):
                w = rng.dirichlet(np.ones(3)) * 0.9 + 0.1 / 3
                fd = central_difference(lambda v: plain_divergence_objective(v, L, op, kind), w)
                an = gradient(w, L, op, cfg)
                err = float(np.max(np.abs(fd - an) / np.maximum(1.0, np.abs(an))))
                worst = max(worst, err)
                if err > FD_TOL:
                    return False, f"{kind}: finite-difference mismatch {err:.2e}"
    return True, f"max finite-difference error {worst:.2e}"


def convexity_suite(seed: int = 14, chords: int = 100) -> SuiteResult:
    rng = np.random.default_rng(seed)
    for t in range(chords):
        L, op = random_instance(rng, 20, 3)
        u, v = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        for kind in ("kl", "brier"):
            cfg = core.PenaltyConfig(kind=kind)
            mid = core.divergence_objective(0.5 * u + 0.5 * v, L, op, cfg)
            chord = 0.5 * core.divergence_objective(u, L, op, cfg) + 0.5 * core.divergence_objective(v, L, op, cfg)
            if mid > chord + CONVEXITY_SLACK:
                return False, f"chord {t} ({kind}): midpoint exceeds chord by {mid - chord:.2e}"
    return True, f"{chords} chords convex for both penalties"


def run_selftest(gradient: Callable | None = None) -> List[Tuple[str, bool, str]]:
    suites = [
        ("grid-oracle", grid_oracle_suite),
        ("boundary-condition", boundary_condition_suite),
        ("gradient", lambda: gradient_suite(gradient=gradient)),
        ("convexity", convexity_suite),
    ]
    results = []
    for name, suite in suites:
        try:
            ok, msg = suite()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, msg))
    return results


def main(gradient: Callable | None = None, out=print) -> int:
    t0 = time.perf_counter()
    results = run_selftest(gradient)
    for name, ok, msg in results:
        out(f"{'PASS' if ok else 'FAIL'} {name}: {msg}")
    elapsed = time.perf_counter() - t0
    if elapsed > BUDGET_SECONDS:
        out(f"WARNING: self-test took {elapsed:.1f}s (budget {BUDGET_SECONDS:.0f}s)")
    return 0 if all(ok for _, ok, _ in results) else 1

"""Mirror-descent minimizer for smooth convex functions on the probability simplex.

Iterates are kept in log space, so every iterate is strictly positive and
normalized by construction. Termination is certified by a relative KKT
residual: on the support, the gradient must agree with the multiplier
``lambda = sum_k w_k g_k``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

Oracle = Callable[[np.ndarray], Tuple[float, np.ndarray]]

SHRINK = 0.5
SUFFICIENT_DECREASE = 1e-4
INITIAL_STEP = 1.0
STEP_MIN, STEP_MAX = 1e-12, 1e12
MAX_BACKTRACKS = 60
ROUNDING_ULPS = 8
# components below this weight whose gradient points outward are candidates for a jump to the floor
THIN = 1e-6
# components below SMALL take their own log-space secant step, at most SMALL_STEP_RATIO times the global step
SMALL = 1e-3
SMALL_STEP_RATIO = 1e8
# exp(-700) is still a normal double; iterates never reach exact zero.
LOG_FLOOR = -700.0


class SolverError(RuntimeError):
    """Raised when the oracle produces a non-finite value or gradient."""


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 10000
    initial_point: Union[str, np.ndarray] = "uniform"
    floor: float = 1e-12

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if not 0 < self.floor <= 1e-6:
            raise ValueError("floor must lie in (0, 1e-6]")
        if isinstance(self.initial_point, str):
            if self.initial_point not in ("uniform", "prior"):
                raise ValueError(f"unknown initial point {self.initial_point!r}")


@dataclass(frozen=True)
class SolverReport:
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool
    wall_time: float


def kkt_residual(w: np.ndarray, grad: np.ndarray, objective: float, floor: float) -> float:
    """Relative stationarity residual on the components above ``floor``."""
    lam = float(np.dot(w, grad))
    active = w > floor
    if not active.any():
        return float("inf")
    return float(np.max(np.abs(grad[active] - lam))) / (1.0 + abs(objective))


def _evaluate(oracle: Oracle, w: np.ndarray) -> Tuple[float, np.ndarray]:
    value, grad = oracle(w)
    value = float(value)
    grad = np.asarray(grad, dtype=float)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise SolverError("oracle returned a non-finite value or gradient")
    return value, grad


def _normalize_log(logw: np.ndarray) -> np.ndarray:
    logw = logw - logw.max()
    logw = logw - np.log(np.exp(logw).sum())
    return np.maximum(logw, LOG_FLOOR)


def _accepts(value: float, grad: np.ndarray, value_new: float, grad_new: np.ndarray, step: np.ndarray) -> bool:
    """Armijo sufficient decrease, or a convexity certificate of non-increase.

    For convex f, ``grad_new . step <= 0`` implies ``f(w_new) <= f(w)``; unlike
    the Armijo test it stays informative once objective differences drop
    below rounding resolution. The computed values may then differ by rounding
    (``ROUNDING_ULPS`` units in the last place) but no more.
    """
    if value_new <= value + SUFFICIENT_DECREASE * float(np.dot(grad, step)):
        return True
    return (
        value_new <= value + ROUNDING_ULPS * np.spacing(abs(value))
        and float(np.dot(grad_new, step)) <= 0.0
        and bool(np.any(step))
    )


def _steps(eta: float, w: np.ndarray, dlog: np.ndarray, ddir: np.ndarray) -> np.ndarray:
    """Global step everywhere except on small components, which use a log-space secant."""
    steps = np.full(w.shape, eta)
    small = w < SMALL
    if small.any():
        curved = small & (dlog * ddir > 0)
        steps[curved] = np.clip(dlog[curved] / ddir[curved], eta, eta * SMALL_STEP_RATIO)
    return steps


def _boundary_jump(oracle, logw, w, value, grad, floor):
    """Send thin outward-pushed components to the log floor if that does not hurt.

    Along a nearly flat gradient such components shrink only geometrically
    and can sit just above ``floor`` for thousands of iterations.
    """
    direction = grad - float(np.dot(w, grad))
    thin = (w < THIN) & (w > floor * 1e-3) & (direction > 0)
    if not thin.any() or thin.all():
        return logw, w, value, grad
    logw_try = logw.copy()
    logw_try[thin] = LOG_FLOOR
    logw_try = _normalize_log(logw_try)
    w_try = np.exp(logw_try)
    w_try /= w_try.sum()
    value_try, grad_try = _evaluate(oracle, w_try)
    if _accepts(value, grad, value_try, grad_try, w_try - w):
        return logw_try, w_try, value_try, grad_try
    return logw, w, value, grad


def _start(k: int, initial) -> np.ndarray:
    if isinstance(initial, str):
        return np.full(k, -np.log(k))
    w0 = np.asarray(initial, dtype=float)
    if w0.shape != (k,):
        raise ValueError(f"initial point has shape {w0.shape}, expected ({k},)")
    if np.any(w0 < 0) or abs(w0.sum() - 1.0) > 1e-9:
        raise ValueError("initial point must lie on the simplex")
    with np.errstate(divide="ignore"):
        return _normalize_log(np.log(w0))


def minimize_on_simplex(
    oracle: Oracle, k: int, cfg: SolverConfig | None = None
) -> Tuple[np.ndarray, SolverReport]:
    """Minimize a smooth convex function over the probability simplex.

    ``oracle(w)`` returns ``(value, gradient)`` and is only ever called at
    strictly positive ``w``. The update is the exponentiated-gradient step
    ``w_k <- w_k exp(-eta_k g_k) / Z``, backtracked until it passes the test in
    :func:`_accepts`. The global step ``eta`` is a Barzilai-Borwein estimate
    ``<dw, dlogw> / <dw, dg>`` from the previous step (``INITIAL_STEP`` at the
    start). Components below ``SMALL`` use their own secant step in log space,
    and those below ``THIN`` that the gradient pushes outward are also tried at
    the log floor after each step (kept only if that passes the same test).

    A string ``cfg.initial_point`` ("uniform" or "prior") starts at the
    uniform vector; callers that want a prior start resolve it to an array.
    When ``max_iterations`` is exhausted, or no step length passes the test,
    the last (lowest) iterate is returned with ``converged=False``.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    if k < 1:
        raise ValueError("dimension must be at least 1")

    logw = _start(k, cfg.initial_point)
    w = np.exp(logw)
    w /= w.sum()
    value, grad = _evaluate(oracle, w)
    residual = kkt_residual(w, grad, value, cfg.floor)
    eta = INITIAL_STEP
    steps = np.full(k, eta)
    iterations = 0
    converged = residual <= cfg.tolerance or k == 1

    while not converged and iterations < cfg.max_iterations:
        iterations += 1
        accepted = False
        # shifting by the multiplier leaves the normalized step unchanged but keeps exponents small
        direction = grad - float(np.dot(w, grad))
        scale = 1.0
        for _ in range(MAX_BACKTRACKS):
            logw_new = _normalize_log(logw - scale * steps * direction)
            w_new = np.exp(logw_new)
            w_new /= w_new.sum()
            value_new, grad_new = _evaluate(oracle, w_new)
            if _accepts(value, grad, value_new, grad_new, w_new - w):
                accepted = True
                break
            scale *= SHRINK
        if not accepted:
            # no step length yields decrease: numerically stationary
            break
        dw = w_new - w
        curvature = float(np.dot(dw, grad_new - grad))
        spread = float(np.dot(dw, logw_new - logw))
        if curvature > 0 and spread > 0:
            eta = min(max(spread / curvature, STEP_MIN), STEP_MAX)
        else:
            eta = min(eta / SHRINK, STEP_MAX)
        direction_new = grad_new - float(np.dot(w_new, grad_new))
        steps = _steps(eta, w_new, logw_new - logw, direction_new - direction)
        logw, w, value, grad = _boundary_jump(oracle, logw_new, w_new, value_new, grad_new, cfg.floor)
        residual = kkt_residual(w, grad, value, cfg.floor)
        converged = residual <= cfg.tolerance

    w_out = np.where(w < cfg.floor, 0.0, w)
    w_out /= w_out.sum()
    report = SolverReport(
        objective=value,
        iterations=iterations,
        kkt_residual=residual,
        converged=bool(converged),
        wall_time=time.perf_counter() - t0,
    )
    return w_out, report

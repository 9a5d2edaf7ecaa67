"""Command-line interface.

Exit codes: 0 success, 1 self-test failure, 2 malformed input or unwritable
output, 3 dimension mismatch, 4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import experiments, selftest
from .core import (
    DimensionError,
    PenaltyConfig,
    deviances,
    divergence_weights,
    new_weights,
    stacking_weights,
)
from .csvio import MalformedInput, parse_inline_vector, read_log_density_csv, read_optimism_csv
from .simulation import SCENARIOS

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_MALFORMED = 2
EXIT_DIMENSION = 3
EXIT_NONCONVERGED = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _list(kind=str):
    def parse(text: str):
        try:
            return tuple(kind(x.strip()) for x in text.split(",") if x.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse list {text!r}") from None
    return parse


def _choices(allowed):
    def parse(text: str):
        items = _list()(text)
        bad = [x for x in items if x not in allowed]
        if bad or not items:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad}; expected from {sorted(allowed)}")
        return items
    return parse


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divweights", description="Weights for averaging probabilistic predictions.")
    sub = parser.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weights", help="weights from a log-density CSV")
    w.add_argument("input", help="CSV: header of model labels, then natural-log densities")
    g = w.add_mutually_exclusive_group()
    g.add_argument("--optimism", help="CSV with columns model,optimism")
    g.add_argument("--op", help="inline optimism vector, comma-separated, in column order")
    w.add_argument("--methods", "--method", dest="methods", type=_choices(experiments.METHODS), default=("dw",))
    w.add_argument("--penalty", choices=("kl", "brier"), default="kl")
    w.add_argument("--c", type=float, default=1.0)
    w.add_argument("--prior", choices=("optimism", "uniform"), default="optimism")

    def common(p, n_grid, replications, scenarios=("nonsparse_indep",)):
        p.add_argument("--seed", type=_nonneg_int, default=0)
        p.add_argument("--replications", type=int, default=replications)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--output", help="output CSV path (default: standard output)")
        p.add_argument("--scenarios", type=_choices(SCENARIOS), default=scenarios)
        p.add_argument("--n-grid", type=_list(int), default=n_grid)
        p.add_argument("--num-models", type=int, default=10)
        p.add_argument("--methods", type=_choices(experiments.METHODS), default=experiments.METHODS)
        p.add_argument("--errors", type=_choices(("gaussian", "student_t3")), default=("gaussian",))

    common(sub.add_parser("simulate", help="RMSE and log score per replication"),
           experiments.DEFAULT_N_GRID, 200, tuple(SCENARIOS))
    common(sub.add_parser("stability", help="across-replication weight sd with fixed truth"), (25, 100), 300)
    r = sub.add_parser("robustness", help="penalty, scale, prior and error-distribution variants")
    common(r, (50,), 200)
    r.set_defaults(errors=("gaussian", "student_t3"))
    r.add_argument("--c", type=_list(float), default=(0.5, 1.0, 2.0))
    r.add_argument("--penalty", type=_choices(("kl", "brier")), default=("kl", "brier"))
    r.add_argument("--prior", type=_choices(("optimism", "uniform")), default=("optimism", "uniform"))
    common(sub.add_parser("convergence", help="gap between empirical and holdout objectives"),
           experiments.CONVERGENCE_N_GRID, 100)
    sub.add_parser("selftest", help="numerical self-check")
    return parser


# ------------------------------------------------------------------ weights


def _load_optimism(args, labels) -> np.ndarray | None:
    if args.optimism:
        return read_optimism_csv(args.optimism, labels)
    if args.op:
        op = parse_inline_vector(args.op)
        if op.shape[0] != len(labels):
            raise DimensionError(f"optimism has {op.shape[0]} entries, matrix has {len(labels)} columns")
        return op
    return None


def _weights_result(method, values, op, penalty):
    if method == "stack":
        w, rep = stacking_weights(values)
        return w, rep.objective, rep.iterations, rep.kkt_residual, rep.converged
    if op is None:
        raise CliError(EXIT_MALFORMED, f"method {method} needs --optimism or --op")
    if method == "dw":
        w, rep = divergence_weights(values, op, penalty)
        return w, rep.objective, rep.iterations, rep.kkt_residual, rep.converged
    w = new_weights(values, op)
    pos = w > 0
    objective = float(np.sum(w[pos] * np.log(w[pos])) + np.dot(w, op) + np.dot(w, deviances(values)))
    return w, objective, 0, 0.0, True


def cmd_weights(args, out) -> int:
    try:
        matrix = read_log_density_csv(args.input)
    except OSError as exc:
        raise CliError(EXIT_MALFORMED, f"cannot read {args.input}: {exc.strerror or exc}") from None
    needs_op = any(m != "stack" for m in args.methods)
    try:
        op = _load_optimism(args, matrix.model_labels) if needs_op else None
    except OSError as exc:
        raise CliError(EXIT_MALFORMED, f"cannot read optimism file: {exc.strerror or exc}") from None
    except KeyError as exc:
        raise DimensionError(exc.args[0]) from None
    penalty = PenaltyConfig(kind=args.penalty, scale_c=args.c, prior=args.prior)
    results = []
    code = EXIT_OK
    for method in args.methods:
        w, objective, iterations, residual, converged = _weights_result(method, matrix.values, op, penalty)
        if not converged:
            code = EXIT_NONCONVERGED
        results.append({
            "method": method,
            "weights": {label: float(x) for label, x in zip(matrix.model_labels, w)},
            "objective": float(objective),
            "iterations": int(iterations),
            "kkt_residual": float(residual),
            "converged": bool(converged),
        })
    payload = results[0] if len(results) == 1 else results
    out.write(json.dumps(payload, indent=2) + "\n")
    return code


# -------------------------------------------------------------- experiments


def _config(args, **extra) -> experiments.ExperimentConfig:
    if args.replications < 1:
        raise CliError(EXIT_MALFORMED, "--replications must be at least 1")
    try:
        return experiments.ExperimentConfig(
            scenarios=args.scenarios,
            n_grid=args.n_grid,
            replications=args.replications,
            base_seed=args.seed,
            methods=args.methods,
            num_models=args.num_models,
            error_kind=args.errors[0],
            error_kinds=args.errors,
            **extra,
        )
    except ValueError as exc:
        raise CliError(EXIT_MALFORMED, str(exc)) from None


def _open_output(path):
    if path is None:
        return sys.stdout, False
    try:
        return open(path, "w", newline="", encoding="utf-8"), True
    except OSError as exc:
        raise CliError(EXIT_MALFORMED, f"cannot write {path}: {exc.strerror or exc}") from None


def _run_experiment(args, runner, fields, **extra) -> int:
    cfg = _config(args, **extra)
    handle, owned = _open_output(args.output)
    try:
        rows = runner(cfg, jobs=max(1, args.jobs))
        experiments.write_records(rows, fields, handle)
    finally:
        if owned:
            handle.close()
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "weights":
            return cmd_weights(args, sys.stdout)
        if args.command == "simulate":
            return _run_experiment(args, experiments.run_simulation, experiments.RECORD_FIELDS)
        if args.command == "stability":
            return _run_experiment(args, experiments.run_stability, experiments.STABILITY_FIELDS)
        if args.command == "robustness":
            return _run_experiment(args, experiments.run_robustness, experiments.ROBUSTNESS_FIELDS,
                                   c_values=args.c, penalties=args.penalty, priors=args.prior)
        if args.command == "convergence":
            return _run_experiment(args, experiments.run_convergence, experiments.CONVERGENCE_FIELDS)
        return selftest.main()
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except MalformedInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())

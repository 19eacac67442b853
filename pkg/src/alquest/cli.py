"""Command-line benchmark harness.

Subcommands:

* ``run``          one active-learning run from a JSON config
* ``sweep``        repeat a run over seeds and aggregate mean/stderr curves
* ``theory-check`` execute the bundled theory property suites
* ``serve``        start the interactive labeling session service
* ``gen``          write a synthetic blob dataset to CSV

Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, RunSpec, load_run_config
from .data import DatasetError, make_blobs, save_csv
from .engine import RunMetrics, run_active_learning, write_jsonl_log
from .models import TrainingDivergedError, make_model

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="alquest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="single active-learning run from a config file")
    run.add_argument("--config", required=True)
    _add_overrides(run)

    sweep = sub.add_parser("sweep", help="repeat a run over seeds and aggregate")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--repeats", type=int, default=None)
    sweep.add_argument("--workers", type=int, default=1)
    _add_overrides(sweep)

    theory = sub.add_parser("theory-check", help="run the theory property suites")
    theory.add_argument("--trials", type=int, default=1000)

    serve = sub.add_parser("serve", help="start the labeling session service")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--console-dir", default=None, help="static console build to host at /console")

    gen = sub.add_parser("gen", help="write a synthetic blob dataset to CSV")
    gen.add_argument("--output", required=True)
    gen.add_argument("--classes", type=int, default=4)
    gen.add_argument("--size", type=int, default=1000)
    gen.add_argument("--features", type=int, default=2)
    gen.add_argument("--separation", type=float, default=8.0)
    gen.add_argument("--seed", type=int, default=0)
    return parser


def _add_overrides(cmd) -> None:
    cmd.add_argument("--strategy", default=None)
    cmd.add_argument("--budget", type=float, default=None)
    cmd.add_argument("--rho", type=float, default=None)
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--output-dir", default=None)


def _apply_overrides(spec: RunSpec, args) -> RunSpec:
    engine = spec.engine
    updates = {}
    if args.strategy is not None:
        updates["strategy"] = args.strategy
    if args.budget is not None:
        updates["budget"] = args.budget
    if args.rho is not None:
        updates["rho"] = args.rho
    if args.seed is not None:
        updates["seed"] = args.seed
    if updates:
        try:
            engine = replace(engine, **updates)
        except ValueError as exc:
            raise ConfigError(str(exc))
        spec = RunSpec(
            dataset=spec.dataset,
            engine=engine,
            repeats=spec.repeats,
            output_dir=spec.output_dir,
            resolved={**spec.resolved, "overrides": updates},
        )
    if args.output_dir is not None:
        spec.output_dir = args.output_dir
    return spec


def _train_true_model(spec: RunSpec, dataset):
    """The ideal baseline's reference: a model fit to every pool label."""
    px, py = dataset.pool()
    model = make_model(
        spec.engine.model_family,
        dataset.n_classes,
        dataset.n_features,
        hidden=spec.engine.hidden,
        seed=spec.engine.seed,
    )
    model.fit(px, py, spec.engine.training)
    return model


def _execute_run(spec: RunSpec, log_path=None) -> RunMetrics:
    dataset = spec.dataset.load()
    px, py = dataset.pool()
    holdout = dataset.holdout()
    true_model = None
    if spec.engine.strategy == "ideal":
        true_model = _train_true_model(spec, dataset)
    log = None
    if log_path is not None:
        log = write_jsonl_log(log_path)
        log({"event": "config", "version": 1, "resolved": spec.resolved})
    try:
        metrics = run_active_learning(px, py, holdout, spec.engine, true_model=true_model, log=log)
    finally:
        if log is not None:
            log.close()
    return metrics


def _cmd_run(args) -> int:
    spec = _apply_overrides(load_run_config(args.config), args)
    os.makedirs(spec.output_dir, exist_ok=True)
    log_path = os.path.join(spec.output_dir, f"run-seed{spec.engine.seed}.jsonl")
    metrics = _execute_run(spec, log_path=log_path)
    csv_path = os.path.join(spec.output_dir, f"metrics-seed{spec.engine.seed}.csv")
    metrics.to_csv(csv_path)
    print(
        f"status={metrics.status} queries={len(metrics.queries)} "
        f"final_accuracy={metrics.final_accuracy:.4f} "
        f"final_sum_cross_entropy={metrics.final_sum_cross_entropy:.4f}"
    )
    print(f"metrics: {csv_path}")
    print(f"log: {log_path}")
    return 0 if metrics.status == "ok" else RUNTIME_ERROR


def _sweep_one(payload):
    spec, seed, out_dir = payload
    run_spec = RunSpec(
        dataset=spec.dataset,
        engine=replace(spec.engine, seed=seed),
        repeats=1,
        output_dir=out_dir,
        resolved=spec.resolved,
    )
    metrics = _execute_run(run_spec, log_path=os.path.join(out_dir, f"run-seed{seed}.jsonl"))
    metrics.to_csv(os.path.join(out_dir, f"metrics-seed{seed}.csv"))
    rows = [
        (r.budget, r.accuracy, r.sum_cross_entropy) for r in metrics.rows
    ]
    return seed, metrics.status, rows, metrics.final_accuracy, metrics.final_sum_cross_entropy


def aggregate_curves(per_run_rows, budget: float):
    """Step-interpolate each run onto integer budgets and average across runs.

    Returns rows (budget, acc_mean, acc_stderr, ce_mean, ce_stderr).
    """
    grid = list(range(0, int(math.floor(budget)) + 1))
    table = []
    for g in grid:
        acc_vals = []
        ce_vals = []
        for rows in per_run_rows:
            best = None
            for b, acc, ce in rows:
                if b <= g + 1e-9:
                    best = (acc, ce)
                else:
                    break
            if best is not None:
                acc_vals.append(best[0])
                ce_vals.append(best[1])
        if not acc_vals:
            continue
        acc_arr = np.asarray(acc_vals)
        ce_arr = np.asarray(ce_vals)
        n = len(acc_arr)
        acc_se = float(acc_arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        ce_se = float(ce_arr.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        table.append((g, float(acc_arr.mean()), acc_se, float(ce_arr.mean()), ce_se))
    return table


def _cmd_sweep(args) -> int:
    spec = _apply_overrides(load_run_config(args.config), args)
    repeats = args.repeats if args.repeats is not None else spec.repeats
    if repeats < 1:
        raise ConfigError("repeats: must be >= 1")
    os.makedirs(spec.output_dir, exist_ok=True)
    seeds = [spec.engine.seed + i for i in range(repeats)]
    payloads = [(spec, seed, spec.output_dir) for seed in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_one, payloads))
    else:
        results = [_sweep_one(p) for p in payloads]
    results.sort(key=lambda item: item[0])
    statuses = [status for _, status, _, _, _ in results]
    per_run_rows = [rows for _, _, rows, _, _ in results]
    finals_acc = [acc for *_, acc, _ in results]
    finals_ce = [ce for *_, ce in results]
    agg_path = os.path.join(spec.output_dir, "sweep-aggregate.csv")
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["budget", "accuracy_mean", "accuracy_stderr", "sum_cross_entropy_mean", "sum_cross_entropy_stderr"])
        for row in aggregate_curves(per_run_rows, spec.engine.budget):
            writer.writerow([row[0]] + [repr(v) for v in row[1:]])
    print(
        f"runs={repeats} mean_final_accuracy={np.mean(finals_acc):.4f} "
        f"mean_final_sum_cross_entropy={np.mean(finals_ce):.4f}"
    )
    print(f"aggregate: {agg_path}")
    return 0 if all(s == "ok" for s in statuses) else RUNTIME_ERROR


def _cmd_theory_check(args) -> int:
    from .theory_suite import run_theory_suites

    results = run_theory_suites(trials=args.trials)
    ok = True
    for name, passed, detail in results:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        ok = ok and passed
    return 0 if ok else RUNTIME_ERROR


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(console_dir=args.console_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_gen(args) -> int:
    ds = make_blobs(
        args.classes,
        args.size,
        n_features=args.features,
        separation=args.separation,
        seed=args.seed,
    )
    save_csv(ds, args.output)
    print(f"wrote {args.size} rows, {args.classes} classes to {args.output}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "theory-check":
            return _cmd_theory_check(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "gen":
            return _cmd_gen(args)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, DatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())

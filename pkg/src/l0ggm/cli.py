"""Command-line entry point: ``l0ggm {solve,generate,tune,eval}``.

Exit codes: 0 on success (gap tolerance met, or heuristic converged),
2 when a limit was hit but a solution was still written, 1 on errors.
"""

import argparse
import math
import os
import sys
import time

from . import io
from .bnb import BnBConfig, initial_incumbent, solve_bnb
from .cd import SolverConfig
from .data import (default_grid, eval_metrics, generate_banded,
                   generate_uniform, sample_gaussian, tune_grid)
from .model import load_instance

EXIT_OK, EXIT_ERROR, EXIT_LIMIT = 0, 1, 2


def _threads(args):
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("PRECISION_BNB_THREADS", "1"))


def _out_dir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_solve(args):
    X = io.read_matrix_csv(args.data)
    big_m = math.inf if args.big_m is None else args.big_m
    inst = load_instance(X, args.lambda0, args.lambda2, big_m, args.standardize)
    out = _out_dir(args.out)
    solver = SolverConfig(rel_obj_tol=args.tol)
    report = {"mode": args.mode, "instance": inst.metadata(),
              "hyperparameters": {"lambda0": inst.lambda0,
                                  "lambda2": inst.lambda2,
                                  "bigM": inst.bigM}}
    t0 = time.perf_counter()
    if args.mode == "heuristic":
        cb = None
        if args.verbose:
            def cb(sweep, obj):
                print(f"sweep {sweep}: objective {obj:.12g}", file=sys.stderr)
        inc = initial_incumbent(inst, solver, callback=cb)
        code = EXIT_OK if inc.solution.converged else EXIT_LIMIT
        report.update(status="converged" if code == EXIT_OK else "unconverged",
                      sweeps=inc.solution.sweeps)
    else:
        log_path = os.path.join(out, "nodes.jsonl")
        log = open(log_path, "w") if args.log_nodes else None
        try:
            cfg = BnBConfig(gap_tol=args.gap_tol, time_limit=args.time_limit,
                            node_limit=args.node_limit, solver=solver,
                            node_log=log)
            res = solve_bnb(inst, cfg)
        finally:
            if log is not None:
                log.close()
        inc = res.incumbent
        code = EXIT_OK if res.status == "optimal" else EXIT_LIMIT
        report.update(status=res.status, gap=res.gap,
                      lower_bound=res.lower_bound, nodes=res.nodes,
                      pruned=res.pruned,
                      incumbent_updates=res.incumbent_updates)
        if args.log_nodes:
            report.setdefault("outputs", {})["node_log"] = log_path
    report["wall_time"] = time.perf_counter() - t0
    report["objective"] = inc.objective
    report["nnz_offdiag"] = len(inc.solution.support())
    theta_path = os.path.join(out, "theta.csv")
    io.write_matrix_csv(theta_path, inc.solution.theta)
    io.save_instance_metadata(os.path.join(out, "instance.json"), inst)
    report.setdefault("outputs", {})["theta"] = theta_path
    if args.truth:
        report["metrics"] = eval_metrics(io.read_matrix_csv(args.truth),
                                         inc.solution.theta)
    io.write_json(os.path.join(out, "report.json"), report)
    if args.verbose:
        print(f"objective {inc.objective:.12g} status {report['status']}",
              file=sys.stderr)
    return code


def cmd_generate(args):
    gen = {"uniform": generate_uniform, "banded": generate_banded}[args.model]
    truth = gen(args.p, args.k, args.cond, args.seed)
    out = _out_dir(args.out_dir)
    X = sample_gaussian(truth, args.n, args.seed)
    io.write_matrix_csv(os.path.join(out, "data.csv"), X)
    io.write_matrix_csv(os.path.join(out, "truth.csv"), truth.theta_star)
    meta = {"model": args.model, "p": args.p, "k": args.k, "n": args.n,
            "cond": args.cond, "seed": args.seed, "bigM": truth.big_m()}
    if args.n_val:
        V = sample_gaussian(truth, args.n_val, args.seed + 1)
        io.write_matrix_csv(os.path.join(out, "val.csv"), V)
        meta["n_val"] = args.n_val
    io.write_json(os.path.join(out, "meta.json"), meta)
    return EXIT_OK


def _parse_grid(text):
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 4x4: {text!r}")


def cmd_tune(args):
    train = io.read_matrix_csv(args.train)
    val = io.read_matrix_csv(args.val)
    if train.shape[1] != val.shape[1]:
        raise ValueError("train and validation column counts differ")
    n, p = train.shape
    g0 = (default_grid(n, p, args.grid[0]) if args.lambda0 is None
          else [args.lambda0])
    g2 = (default_grid(n, p, args.grid[1]) if args.lambda2 is None
          else [args.lambda2])
    bnb = BnBConfig(gap_tol=args.gap_tol, time_limit=args.time_limit)
    res = tune_grid(train, val, args.big_m, g0, g2, args.mode,
                    standardize=args.standardize, bnb=bnb,
                    threads=_threads(args))
    out = _out_dir(args.out)
    io.write_matrix_csv(os.path.join(out, "theta.csv"), res.fit.theta)
    report = {"mode": args.mode, "table": res.table,
              "chosen": {"lambda0": res.lambda0, "lambda2": res.lambda2}}
    if args.truth:
        report["metrics"] = eval_metrics(io.read_matrix_csv(args.truth),
                                         res.fit.theta)
    io.write_json(os.path.join(out, "report.json"), report)
    print(f"{'lambda0':>12} {'lambda2':>12} {'val_loss':>14} {'nnz':>6}")
    for row in res.table:
        mark = " *" if (row["lambda0"], row["lambda2"]) == (
            res.lambda0, res.lambda2) else ""
        print(f"{row['lambda0']:12.5g} {row['lambda2']:12.5g} "
              f"{row['val_loss']:14.8g} {row['nnz_offdiag']:6d}{mark}")
    return EXIT_OK


def cmd_eval(args):
    est = io.read_matrix_csv(args.estimate)
    truth = io.read_matrix_csv(args.truth)
    if est.shape != truth.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {truth.shape}")
    metrics = eval_metrics(truth, est)
    if args.out:
        io.write_json(args.out, metrics)
    print(" ".join(f"{k}={v}" for k, v in sorted(metrics.items())))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="l0ggm",
        description="Sparse precision matrices by l0l2-penalized "
                    "pseudo-likelihood.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="fit one (lambda0, lambda2) pair")
    p.add_argument("data", help="n x p data CSV")
    p.add_argument("--lambda0", type=float, required=True)
    p.add_argument("--lambda2", type=float, required=True)
    p.add_argument("--big-m", type=float, default=None,
                   help="box on off-diagonals (required for exact mode)")
    p.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    p.add_argument("--gap-tol", type=float, default=0.05)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-6,
                   help="relative objective tolerance of the CD solver")
    p.add_argument("--standardize", action="store_true",
                   help="mean-center columns before scaling")
    p.add_argument("--truth", help="ground-truth CSV for metrics")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--log-nodes", action="store_true",
                   help="write nodes.jsonl (exact mode)")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="synthetic truth and samples")
    p.add_argument("--model", choices=("uniform", "banded"), required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cond", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-val", type=int, default=0,
                   help="also write a validation set of this size")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("tune", help="grid search on validation loss")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--grid", type=_parse_grid, default=(4, 4))
    p.add_argument("--lambda0", type=float, default=None,
                   help="fix lambda0 instead of gridding it")
    p.add_argument("--lambda2", type=float, default=None,
                   help="fix lambda2 instead of gridding it")
    p.add_argument("--mode", choices=("exact", "heuristic"),
                   default="heuristic")
    p.add_argument("--big-m", type=float, default=2.0)
    p.add_argument("--gap-tol", type=float, default=0.05)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--truth")
    p.add_argument("--out", default=".")
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", help="metrics of an estimate against a truth")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="write metrics JSON here")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as err:
        print(f"l0ggm: error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands: ``analyze`` prints a dictionary's incoherence report as JSON;
``solve`` runs one solver on a (dictionary, instance) pair and writes the
trace CSV; ``experiment`` and ``compare`` run batch certifications from a
JSON config; ``report`` re-renders figures from previously written CSVs.
Exit code 0 means every checked guarantee held.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .analysis import analyze_dictionary
from .harness import (
    ExperimentConfig,
    compare_solvers,
    run_experiment,
    write_trace_csv,
)
from .instances import load_dictionary, load_instance
from .solvers import SolverConfig, solve


def _cmd_analyze(args) -> int:
    D = load_dictionary(args.dict_file)
    m_max = args.m if args.m is not None else min(8, D.n - 1)
    report = analyze_dictionary(D, m_max=m_max)
    print(json.dumps(report.to_json_dict(), indent=2))
    return 0


def _cmd_solve(args) -> int:
    if args.algo == "fw" and args.beta is None:
        print("solve: --algo fw requires --beta", file=sys.stderr)
        return 2
    D = load_dictionary(args.dict_file)
    inst = load_instance(args.instance_file, D)
    cfg = SolverConfig(
        algorithm=args.algo,
        beta=args.beta,
        tol_residual=args.tol,
        max_iters=args.max_iters,
    )
    result = solve(D, inst.y, cfg, ground_truth=inst)
    if args.trace:
        write_trace_csv(result, args.trace)
    print(
        json.dumps(
            {
                "algorithm": args.algo,
                "iterations": result.iterations,
                "final_residual": result.final_residual_norm,
                "terminated_by": result.terminated_by,
                "x_l1": float(np.abs(result.final_x).sum()),
                "recovery_error": float(np.linalg.norm(result.final_x - inst.x_star)),
                "trace": args.trace,
            },
            indent=2,
        )
    )
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    if args.no_plots:
        cfg = ExperimentConfig.from_json_dict({**cfg.to_json_dict(), "figures": False})
    reports = run_experiment(cfg)
    failures = [v for r in reports for v in r.violations]
    for v in failures:
        print(f"VIOLATION {v}", file=sys.stderr)
    print(
        json.dumps(
            {
                "trials": len(reports),
                "guaranteed_regime_trials": sum(r.guaranteed_regime for r in reports),
                "violations": len(failures),
                "output_dir": cfg.output_dir,
            },
            indent=2,
        )
    )
    return 0 if not failures else 1


def _cmd_compare(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    if args.no_plots:
        cfg = ExperimentConfig.from_json_dict({**cfg.to_json_dict(), "figures": False})
    rows = compare_solvers(cfg)
    failures = [v for r in rows for v in r["violations"]]
    for v in failures:
        print(f"VIOLATION {v}", file=sys.stderr)
    print(
        json.dumps(
            {
                "trials": len(rows),
                "violations": len(failures),
                "output_dir": cfg.output_dir,
            },
            indent=2,
        )
    )
    return 0 if not failures else 1


def _cmd_report(args) -> int:
    from .plots import render_comparison_figures, render_experiment_figures

    out = Path(args.output_dir)
    written = render_experiment_figures(out) + render_comparison_figures(out)
    for path in written:
        print(path)
    if not written:
        print(f"no CSV reports found under {out}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fwsparse",
        description="Sparse-recovery solvers, dictionary analysis and certification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="incoherence report for a dictionary file (JSON to stdout)")
    p.add_argument("dict_file")
    p.add_argument("--m", type=int, default=None, help="largest Babel set size to report")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("solve", help="run one solver on a dictionary/instance pair")
    p.add_argument("dict_file")
    p.add_argument("instance_file")
    p.add_argument("--algo", choices=("fw", "mp", "omp"), required=True)
    p.add_argument("--beta", type=float, default=None, help="l1 radius (fw only)")
    p.add_argument("--tol", type=float, default=1e-9, help="residual-norm stopping tolerance")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--trace", default=None, help="write the per-iteration CSV here")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("experiment", help="run a batch certification from a JSON config")
    p.add_argument("config")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("compare", help="run fw/mp/omp on identical instances")
    p.add_argument("config")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("report", help="re-render figures from existing CSV reports")
    p.add_argument("output_dir")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

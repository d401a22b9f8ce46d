"""
Command line interface: sbm-ssl run | summarize | solve | meanfield.
"""

import argparse
from dataclasses import asdict, replace
import json
import logging
import math
from pathlib import Path
import sys
from typing import Optional

import pandas as pd

import sbmssl
from sbmssl._harness import PRESETS

logger = logging.getLogger(__name__)

_DEFAULT_OUTPUT = "results.csv"


def main(argv: Optional[list[str]] = None) -> int:
    """
    Entry point of the sbm-ssl command.

    Args:
        argv (list[str], optional): the arguments. Defaults to None, sys.argv.

    Returns:
        int: the exit code, 0 on success, 1 on invalid input or a failed command.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        format="%(asctime)s.%(msecs)03d|%(levelname)s|%(name)s|%(message)s",
        datefmt="%H:%M:%S",
        level=logging.DEBUG if args.verbose else logging.INFO,
    )
    try:
        return args.func(args)
    except (ValueError, ArithmeticError, OSError) as ex:
        logger.error(f"{args.command} failed: {ex}")
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbm-ssl",
        description="Semi-supervised community detection on SSBM graphs.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {sbmssl.__version__}"
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Log debug messages."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    run = subparsers.add_parser("run", help="Run an experiment grid to a CSV file.")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", type=Path, help="JSON experiment spec file.")
    source.add_argument(
        "--preset", choices=sorted(PRESETS), help="Built-in experiment."
    )
    run.add_argument("--seed", type=int, help="Base seed, overrides the spec.")
    run.add_argument("--threads", type=int, help="Worker threads, overrides the spec.")
    run.add_argument(
        "--dump-labels",
        action="store_true",
        help="Add the sampled oracle labels to every row.",
    )
    run.add_argument(
        "--output",
        type=Path,
        help=f"Results CSV. Defaults to the spec's output, else {_DEFAULT_OUTPUT}.",
    )
    run.set_defaults(func=_run)

    summarize = subparsers.add_parser(
        "summarize", help="Mean and standard error per grid point and algorithm."
    )
    summarize.add_argument("csv", type=Path, help="Results CSV written by run.")
    summarize.add_argument(
        "--json", type=Path, metavar="PATH", help="Also write JSON records to PATH."
    )
    summarize.set_defaults(func=_summarize)

    solve = subparsers.add_parser(
        "solve", help="Classify the nodes of a graph from an edge list."
    )
    solve.add_argument("--graph", type=Path, required=True, help="Edge list file.")
    solve.add_argument("--labels", type=Path, required=True, help="Oracle labels file.")
    solve.add_argument("--tau", type=float, required=True, help="Regularization tau.")
    solve.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        required=True,
        help="Weight of the oracle labels, inf to clamp them.",
    )
    solve.add_argument(
        "--alpha", type=float, help="Diagonal shift. Defaults to the spectral norm."
    )
    solve.add_argument(
        "--degree-cap", type=float, help="Scale down the edges of high degree nodes."
    )
    solve.add_argument("--output", type=Path, help="Output CSV. Defaults to stdout.")
    solve.set_defaults(func=_solve)

    meanfield = subparsers.add_parser(
        "meanfield", help="Print the mean-field closed forms and bounds as JSON."
    )
    meanfield.add_argument("--n", type=int, required=True)
    meanfield.add_argument("--p-in", type=float, required=True)
    meanfield.add_argument("--p-out", type=float, required=True)
    meanfield.add_argument("--eta", type=float, required=True)
    meanfield.add_argument("--theta", type=float, required=True)
    meanfield.add_argument(
        "--lambda", dest="lam", type=float, help="Defaults to the MAP value."
    )
    meanfield.add_argument(
        "--C",
        dest="constants",
        type=float,
        nargs="+",
        default=[1.0, 10.0],
        help="Concentration constants to evaluate the bounds for.",
    )
    meanfield.set_defaults(func=_meanfield)

    return parser


def _run(args: argparse.Namespace) -> int:
    if args.spec is not None:
        spec = sbmssl.ExperimentSpec.from_json(args.spec)
    else:
        spec = PRESETS[args.preset]()

    changes: dict = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.dump_labels:
        changes["dump_labels"] = True
    spec = replace(spec, **changes)
    output = args.output or Path(spec.output or _DEFAULT_OUTPUT)

    rows = sbmssl.run_experiment(spec)
    sbmssl.write_results(rows, output, dump_labels=spec.dump_labels)
    nb_failed = sum(row.failed for row in rows)
    print(f"{len(rows)} rows written to {output} ({nb_failed} failed)")
    return 0


def _summarize(args: argparse.Namespace) -> int:
    summary_df = sbmssl.summarize(args.csv)
    with pd.option_context("display.max_rows", None, "display.width", 120):
        print(summary_df.to_string(index=False))
    if args.json is not None:
        args.json.write_text(sbmssl.summary_to_json(summary_df))
        logger.info(f"summary written to {args.json}")
    return 0


def _solve(args: argparse.Namespace) -> int:
    g = sbmssl.load_edge_list(args.graph)
    labels = sbmssl.load_labels(args.labels)
    if labels.n != g.n:
        raise ValueError(f"{args.labels} has {labels.n} labels for {g.n} nodes")
    if args.degree_cap is not None:
        g = sbmssl.degree_regularize(g, args.degree_cap)

    params = sbmssl.SslParams(
        tau=args.tau,
        lam=args.lam,
        alpha_policy="explicit" if args.alpha is not None else "spectral-norm",
        alpha=args.alpha,
    )
    if params.is_perfect:
        score, report = sbmssl.solve_perfect(g, labels, params)
    else:
        score, report = sbmssl.solve_noisy(g, labels, params)
    logger.info(f"solve: alpha={score.alpha}, {report}")

    result_df = pd.DataFrame(
        {"node": range(g.n), "score": score.x, "label": score.labels}
    )
    if args.output is None:
        result_df.to_csv(sys.stdout, index=False)
    else:
        result_df.to_csv(args.output, index=False)
        logger.info(f"solve: {g.n} labels written to {args.output}")
    return 0 if report.converged else 1


def _meanfield(args: argparse.Namespace) -> int:
    model = sbmssl.ModelParams(
        n=args.n, p_in=args.p_in, p_out=args.p_out, eta=args.eta, theta=args.theta
    )
    lam = model.lam if args.lam is None else args.lam
    solution = sbmssl.meanfield_solution(model, lam)
    conditions = sbmssl.classification_conditions(model, lam)

    report = {
        "n": model.n,
        "p_in": model.p_in,
        "p_out": model.p_out,
        "eta": model.eta,
        "theta": model.theta,
        "d": model.d,
        "tau": model.tau,
        "lambda": lam,
        **asdict(solution),
        **asdict(conditions),
        "spectral_gap": sbmssl.spectral_gap(model, lam),
        "snr": sbmssl.snr(model.n * model.p_in, model.n * model.p_out),
        "bounds": [
            {
                "C": constant,
                "concentration": sbmssl.concentration_bound(model, lam, constant),
                "misclassification": sbmssl.misclassification_bound(
                    model, lam, constant
                ),
                "accurate_oracle": sbmssl.accurate_oracle_bound(model, constant),
                "detection_threshold": sbmssl.detection_threshold(
                    constant, model.labeled_fraction
                ),
            }
            for constant in args.constants
        ],
    }
    if not math.isinf(lam):
        spectrum = sbmssl.mf_spectrum(model, lam)
        report["t1"] = [spectrum.t1_plus, spectrum.t1_minus]
        report["t2"] = [spectrum.t2_plus, spectrum.t2_minus]
    print(json.dumps(_jsonable(report), indent=2))
    return 0


def _jsonable(value):
    """Replace infinite floats by the strings "inf" and "-inf"."""
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_jsonable(item) for item in value]
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value

"""Command-line interface.

Exit codes: 0 success, 2 invalid input, 3 infeasible regime, 4 degenerate fit.
"""

import argparse
import json
import sys

from .analyze_gauss import AnalyzeGaussInference, release_noisy_gram
from .data_io import load_csv
from .exceptions import (
    DegenerateFitError,
    DpolsError,
    InfeasibleRegimeError,
    InvalidInputError,
)
from .experiments import ExperimentConfig, power_tables, run_experiment, summarize
from .ols import LeastSquaresInference
from .projected import ProjectedLeastSquares, choose_r
from .projection import PrivacyBudget, ProjectionRelease, project
from .reports import reports_to_csv, reports_to_json
from .ridge import ProjectedRidgeInference, select_r_ridge
from .synthetic import GaussianLinearModel


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w") as handle:
            handle.write(text)


def _emit_reports(reports, out: str | None) -> None:
    if out is not None and out.endswith(".csv"):
        _write(reports_to_csv(reports), out)
    else:
        _write(reports_to_json(reports), out)


def _dataset_from_args(args):
    return load_csv(args.data, args.label, row_bound=args.bound, policy="clip" if args.clip else "reject")


def _cmd_project(args) -> int:
    dataset = _dataset_from_args(args)
    release = project(
        dataset,
        PrivacyBudget(args.epsilon, args.delta),
        args.r,
        seed=args.seed,
        w_variant=args.w_variant,
    )
    _write(release.to_json(), args.out)
    return 0


def _cmd_fit_ols(args) -> int:
    dataset = _dataset_from_args(args)
    fit = LeastSquaresInference().fit(dataset.features(), dataset.labels())
    _emit_reports(fit.reports(args.alpha), args.out)
    return 0


def _cmd_fit_projected(args) -> int:
    with open(args.release) as handle:
        release = ProjectionRelease.from_json(handle.read())
    fit = ProjectedLeastSquares(label_column=args.label_column).fit(release)
    _emit_reports(fit.reports(args.alpha), args.out)
    return 0


def _cmd_fit_ridge(args) -> int:
    with open(args.release) as handle:
        release = ProjectionRelease.from_json(handle.read())
    fit = ProjectedRidgeInference(label_column=args.label_column).fit(release)
    _emit_reports(fit.reports(args.alpha), args.out)
    return 0


def _cmd_analyze_gauss(args) -> int:
    dataset = _dataset_from_args(args)
    release = release_noisy_gram(dataset, PrivacyBudget(args.epsilon, args.delta), seed=args.seed)
    _write(release.to_json(), args.out)
    if args.reports_out:
        fit = AnalyzeGaussInference().fit(release)
        _emit_reports(fit.reports(dataset.row_bound, nu=args.nu), args.reports_out)
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config) as handle:
        config = ExperimentConfig.from_dict(json.load(handle))
    if args.seed is not None:
        config.seed = args.seed
    report = run_experiment(config)
    _write(json.dumps(report, indent=2), args.out)
    if args.out is not None and args.out != "-":
        sys.stdout.write(summarize(report) + "\n")
    return 0


def _cmd_power(args) -> int:
    with open(args.config) as handle:
        doc = json.load(handle)
    model = GaussianLinearModel.from_json(json.dumps(doc["model"]))
    table = power_tables(
        model,
        grid=[tuple(cell) for cell in doc["grid"]],
        trials=int(doc.get("trials", 200)),
        alpha=float(doc.get("alpha", 0.05)),
        nu=float(doc.get("nu", 0.05)),
        delta=float(doc.get("delta", 1e-6)),
        seed=int(doc.get("seed", 0) if args.seed is None else args.seed),
        coordinate=int(doc.get("coordinate", 0)),
    )
    _write(table, args.out)
    return 0


def _cmd_choose_r(args) -> int:
    budget = PrivacyBudget(args.epsilon, args.delta)
    if args.path == "projected":
        r = choose_r(args.n, args.p, args.bound, budget, args.sigma_min)
    else:
        r = select_r_ridge(
            args.n,
            args.p,
            args.eta,
            args.bound,
            budget,
            args.sigma_min,
            beta_norm2=args.beta_norm2,
            beta_j=args.beta_j,
            sigma2=args.sigma2,
        )
    _write(str(r), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpols",
        description="Differentially private second-moment releases and least-squares inference",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for all randomness")
    common.add_argument("--out", default=None, help="output path ('-' or omitted for stdout)")

    data_common = argparse.ArgumentParser(add_help=False)
    data_common.add_argument("--data", required=True, help="headered CSV of finite numbers")
    data_common.add_argument("--label", default="-1", help="label column name or index (default: last)")
    data_common.add_argument("--bound", type=float, default=None, help="declared row norm bound")
    data_common.add_argument("--clip", action="store_true", help="rescale over-bound rows instead of rejecting")

    budget_common = argparse.ArgumentParser(add_help=False)
    budget_common.add_argument("--epsilon", type=float, default=1.0)
    budget_common.add_argument("--delta", type=float, default=1e-6)

    sub = parser.add_subparsers(dest="command", required=True)

    p_project = sub.add_parser(
        "project", parents=[common, data_common, budget_common], help="release a private sketch"
    )
    p_project.add_argument("-r", type=int, required=True, help="sketch rows")
    p_project.add_argument("--w-variant", choices=("algorithm", "notation"), default="algorithm")
    p_project.set_defaults(func=_cmd_project)

    p_ols = sub.add_parser("fit-ols", parents=[common, data_common], help="classical inference on raw data")
    p_ols.add_argument("--alpha", type=float, default=0.05)
    p_ols.set_defaults(func=_cmd_fit_ols)

    p_proj = sub.add_parser("fit-projected", parents=[common], help="inference from an unaltered release")
    p_proj.add_argument("--release", required=True, help="release JSON from `project`")
    p_proj.add_argument("--alpha", type=float, default=0.05)
    p_proj.add_argument("--label-column", type=int, default=-1)
    p_proj.set_defaults(func=_cmd_fit_projected)

    p_ridge = sub.add_parser("fit-ridge", parents=[common], help="inference from an altered release")
    p_ridge.add_argument("--release", required=True, help="release JSON from `project`")
    p_ridge.add_argument("--alpha", type=float, default=0.05)
    p_ridge.add_argument("--label-column", type=int, default=-1)
    p_ridge.set_defaults(func=_cmd_fit_ridge)

    p_ag = sub.add_parser(
        "analyze-gauss",
        parents=[common, data_common, budget_common],
        help="release a noisy second-moment matrix",
    )
    p_ag.add_argument("--nu", type=float, default=0.05)
    p_ag.add_argument("--reports-out", default=None, help="also write interval reports here")
    p_ag.set_defaults(func=_cmd_analyze_gauss)

    p_sim = sub.add_parser("simulate", parents=[common], help="run a Monte Carlo scenario")
    p_sim.add_argument("--config", required=True, help="experiment config JSON")
    p_sim.set_defaults(func=_cmd_simulate)

    p_power = sub.add_parser("power", parents=[common], help="rejection-rate table over a grid")
    p_power.add_argument("--config", required=True, help="grid config JSON")
    p_power.set_defaults(func=_cmd_power)

    p_choose = sub.add_parser("choose-r", parents=[common, budget_common], help="pick a sketch size")
    p_choose.add_argument("--path", choices=("projected", "ridge"), default="projected")
    p_choose.add_argument("--n", type=int, required=True)
    p_choose.add_argument("--p", type=int, required=True)
    p_choose.add_argument("--bound", type=float, required=True)
    p_choose.add_argument(
        "--sigma-min",
        type=float,
        required=True,
        dest="sigma_min",
        help="smallest eigenvalue: of the joint-row covariance (projected) or of (1/n) X^T X (ridge)",
    )
    p_choose.add_argument("--eta", type=float, default=0.1)
    p_choose.add_argument("--beta-norm2", type=float, default=1.0)
    p_choose.add_argument("--beta-j", type=float, default=1.0)
    p_choose.add_argument("--sigma2", type=float, default=1.0)
    p_choose.set_defaults(func=_cmd_choose_r)

    return parser


def _normalize_label(args) -> None:
    if hasattr(args, "label"):
        try:
            args.label = int(args.label)
        except (TypeError, ValueError):
            pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _normalize_label(args)
    try:
        return args.func(args)
    except DegenerateFitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InfeasibleRegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DpolsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``varsvm {gen,train,predict,compare,verify}``.

Exit codes: 0 success (non-convergence included, flagged in the output),
2 malformed spec or flags, 3 unusable data, 4 incompatible model/data.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as vio
from .classical import GRADIENT_MODES, SolverConfig
from .datagen import GENERATOR_VERSION, GaussianSpec, generate
from .errors import CompatibilityError, DataError, MissingClassError, SpecError
from .model import SIGMA_MODES, decision_values
from .report import compare_report, train, train_summary, verify_report

EXIT_OK, EXIT_SPEC, EXIT_DATA, EXIT_COMPAT = 0, 2, 3, 4


def _emit(text: str, output=None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def load_gen_spec(path) -> list[GaussianSpec]:
    """Gaussian blocks from ``{"gaussians": [...]}`` or a bare JSON list."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec {path} is not valid JSON: {exc}") from exc
    if isinstance(raw, dict):
        unknown = sorted(set(raw) - {"gaussians"})
        if unknown:
            raise SpecError(f"spec has unknown field '{unknown[0]}'")
        if "gaussians" not in raw:
            raise SpecError("spec is missing field 'gaussians'")
        raw = raw["gaussians"]
    if not isinstance(raw, list):
        raise SpecError("field 'gaussians' must be a list of blocks")
    blocks = []
    for k, block in enumerate(raw):
        if not isinstance(block, dict):
            raise SpecError(f"gaussians[{k}] must be an object")
        try:
            blocks.append(GaussianSpec.from_dict(block))
        except SpecError as exc:
            raise SpecError(f"gaussians[{k}]: {exc}") from exc
    return blocks


VERBOSE_RESTARTS = 4


def config_from_args(args) -> SolverConfig:
    # --verbose turns on the multi-start survey unless --restarts says otherwise
    restarts = args.restarts
    if restarts is None:
        restarts = VERBOSE_RESTARTS if args.verbose else 0
    return SolverConfig(cost=args.cost, kkt_tol=args.kkt_tol, outer_tol=args.outer_tol,
                        max_outer=args.max_outer, sigma_mode=args.sigma_mode,
                        gradient_mode=args.gradient_mode, restarts=restarts, seed=args.seed)


def cmd_gen(args) -> int:
    data = generate(load_gen_spec(args.spec), args.seed)
    text = vio.dataset_to_csv(data)
    if args.output is None:
        sys.stdout.write(text)
        return EXIT_OK
    _emit(text, args.output)
    summary = {
        "output": str(args.output),
        "generator_version": GENERATOR_VERSION,
        "seed": args.seed,
        "n": data.n,
        "p": data.p,
        "counts": {"neg": int(np.sum(data.labels < 0)), "pos": int(np.sum(data.labels > 0))},
        "dataset_hash": vio.dataset_hash(data),
    }
    print(vio.dumps(summary))
    return EXIT_OK


def cmd_train(args) -> int:
    data = vio.read_dataset(args.data)
    data.require_both_classes()
    config = config_from_args(args)
    model = train(data, args.method, config)
    summary = train_summary(data, model, config)
    summary["dataset_hash"] = vio.dataset_hash(data)
    if args.output is not None:
        mf = vio.ModelFile.from_model(model, config, summary["dataset_hash"], args.seed,
                                      metrics={"objective": model.objective,
                                               "converged": bool(model.converged)})
        vio.save_model(mf, args.output)
        summary["model_path"] = str(args.output)
    print(vio.dumps(summary))
    return EXIT_OK


def cmd_predict(args) -> int:
    mf = vio.load_model(args.model)
    points = vio.read_points(args.data)
    if points.shape[1] != mf.beta.shape[0]:
        raise CompatibilityError(
            f"model expects {mf.beta.shape[0]} features, data has {points.shape[1]}")
    try:
        data = vio.read_dataset(args.data)
    except DataError:
        data = None
    if data is not None and vio.dataset_hash(data) == mf.provenance.get("dataset_hash"):
        print("note: data matches the training dataset hash", file=sys.stderr)
    values = decision_values(mf.hyperplane, points)
    lines = ["index,decision_value,label"]
    lines += [f"{i},{vio.fmt(v)},{1 if v >= 0 else -1}" for i, v in enumerate(values)]
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_compare(args) -> int:
    data = vio.read_dataset(args.data)
    holdout = None
    if args.holdout is not None:
        holdout = vio.read_dataset(args.holdout)
        if holdout.p != data.p:
            raise CompatibilityError(
                f"holdout has {holdout.p} features, training data has {data.p}")
    report = compare_report(data, config_from_args(args), holdout)
    report["dataset_hash"] = vio.dataset_hash(data)
    _emit(vio.dumps(report) + "\n", args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    data = vio.read_dataset(args.data)
    report = verify_report(data, config_from_args(args), args.gradient_samples)
    _emit(vio.dumps(report) + "\n", args.output)
    return EXIT_OK


def _solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    p.add_argument("--cost", type=float, default=d.cost, help="penalty C (default %(default)s)")
    p.add_argument("--kkt-tol", type=float, default=d.kkt_tol,
                   help="KKT residual tolerance (default %(default)s)")
    p.add_argument("--outer-tol", type=float, default=d.outer_tol,
                   help="alternation stopping tolerance (default %(default)s)")
    p.add_argument("--max-outer", type=int, default=d.max_outer,
                   help="maximum alternation rounds (default %(default)s)")
    p.add_argument("--sigma-mode", choices=SIGMA_MODES, default=d.sigma_mode)
    p.add_argument("--gradient-mode", choices=GRADIENT_MODES, default=d.gradient_mode)
    p.add_argument("--restarts", type=int, default=None,
                   help=f"extra random starts for the variance solver "
                        f"(default 0, or {VERBOSE_RESTARTS} with --verbose)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varsvm", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", action="store_true",
                        help="show tracebacks on error and survey variance fixed points")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        p.set_defaults(func=func)
        return p

    p = add("gen", cmd_gen, "draw a two-class Gaussian dataset from a JSON spec")
    p.add_argument("spec", help="JSON file: {\"gaussians\": [block, block]}")
    p.add_argument("--output", help="CSV path (default: CSV to stdout, no summary)")

    p = add("train", cmd_train, "train a model and print a JSON summary")
    p.add_argument("data", help="dataset CSV (f1,...,fp,label)")
    p.add_argument("--method", choices=("classical", "variance"), default="variance")
    p.add_argument("--output", help="write the model JSON here")
    _solver_flags(p)

    p = add("predict", cmd_predict, "decision values and labels for each row of a CSV")
    p.add_argument("model", help="model JSON written by 'train'")
    p.add_argument("data", help="CSV with f1,...,fp and an optional label column")
    p.add_argument("--output", help="write predictions here instead of stdout")

    p = add("compare", cmd_compare, "train both methods and report them side by side")
    p.add_argument("data")
    p.add_argument("--holdout", help="held-out dataset CSV for error counts")
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    _solver_flags(p)

    p = add("verify", cmd_verify, "run the solver checks and report pass/fail per check")
    p.add_argument("data")
    p.add_argument("--gradient-samples", type=int, default=20,
                   help="random points for the gradient check (default %(default)s)")
    p.add_argument("--output", help="write the JSON report here instead of stdout")
    _solver_flags(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SPEC if exc.code not in (0, None) else EXIT_OK
    codes = ((SpecError, EXIT_SPEC), ((DataError, MissingClassError), EXIT_DATA),
             (CompatibilityError, EXIT_COMPAT))
    try:
        return args.func(args)
    except (SpecError, DataError, MissingClassError, CompatibilityError) as exc:
        if args.verbose:
            raise
        print(f"varsvm {args.command}: error: {exc}", file=sys.stderr)
        return next(code for kind, code in codes if isinstance(exc, kind))


if __name__ == "__main__":
    raise SystemExit(main())

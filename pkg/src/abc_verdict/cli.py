"""Command-line entry point: ``abc-verdict <experiment> ...`` and ``abc-verdict oracle ...``.

Exit status is 0 when every invariant guard passed. Any failure prints one
JSON object on stderr (``{"status": "error", "kind": ..., ...}``) and exits
nonzero: 3 for a violated invariant, 1 for anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .abc import Metric, parse_rule
from .experiments import EXPERIMENTS, ExperimentSpec, run_experiment
from .models import Dataset, ModelPairSpec
from .oracles import exact_logs
from .report import InvariantViolation, emit_outputs
from .summaries import SummaryStatistic

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVARIANT = 3


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _add_pair_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pair", choices=["pois-geo", "normal"], default=None)
    p.add_argument("--sigma1", type=float, default=0.1)
    p.add_argument("--sigma2", type=float, default=10.0)
    p.add_argument("--a", type=float, default=1.0, help="prior standard deviation of the normal mean")


def _pair_from_args(args) -> ModelPairSpec | None:
    if args.pair is None:
        return None
    if args.pair == "pois-geo":
        return ModelPairSpec.poisson_geometric()
    return ModelPairSpec.normal(args.sigma1, args.sigma2, args.a)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abc-verdict", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--seed", type=_u64, required=True)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--plot", action="store_true")
        p.add_argument("--n", type=_positive_int)
        p.add_argument("--reps", type=_positive_int)
        _add_pair_args(p)
        p.add_argument("--stat", choices=[s.value for s in SummaryStatistic if s is not SummaryStatistic.EMPTY])
        p.add_argument("--rule", type=parse_rule, help="knn:<k> or eps:<x>")
        p.add_argument("--table-size", type=_positive_int)
        p.add_argument("--metric", choices=["euclidean", "normalized"], default="normalized")
        p.add_argument("--theta0", type=float, nargs="+", help="Poisson rates for lemma-convergence")
        p.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("oracle", help="exact log Bayes factors for one dataset")
    _add_pair_args(p)
    p.add_argument("--data", required=True, help="CSV file of observations, '-' for stdin, or an inline list")
    return parser


def read_data(source: str) -> Dataset:
    if source == "-":
        text = sys.stdin.read()
    elif Path(source).is_file():
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    tokens = [t for t in text.replace("\n", ",").replace(" ", ",").split(",") if t.strip()]
    try:
        return Dataset(np.array([float(t) for t in tokens]))
    except ValueError as exc:
        raise ValueError(f"could not read observations from {source!r}: {exc}") from exc


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"status": "error", "kind": kind, "message": message, **extra}), file=sys.stderr)
    return code


def _run_oracle(args) -> int:
    pair = _pair_from_args(args) or ModelPairSpec.poisson_geometric()
    y = read_data(args.data)
    for value in exact_logs(pair, y):
        print(repr(float(value)))
    return EXIT_OK


def _run_experiment(args) -> int:
    spec = ExperimentSpec(
        experiment=args.command,
        master_seed=args.seed,
        pair=_pair_from_args(args),
        reps=args.reps,
        n=args.n,
        statistic=SummaryStatistic(args.stat) if args.stat else None,
        rule=args.rule,
        table_size=args.table_size,
        metric=Metric.EUCLIDEAN if args.metric == "euclidean" else Metric.NORMALIZED_EUCLIDEAN,
        workers=args.workers,
        **({"theta0": tuple(args.theta0)} if args.theta0 else {}),
    )
    report = run_experiment(spec)
    for path in emit_outputs(report, args.out, plot=args.plot):
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle":
            return _run_oracle(args)
        return _run_experiment(args)
    except InvariantViolation as exc:
        return _fail("invariant", str(exc), EXIT_INVARIANT, invariant=exc.invariant)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_ERROR)
    except ValueError as exc:
        return _fail("invalid-input", str(exc), EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())

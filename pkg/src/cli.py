# src/cli.py
"""
Command-line entry point: python -m src.cli <command> [flags]

  fit        CSV -> model JSON
  density    model JSON + points CSV -> density CSV
  simulate   scenario sample -> CSV
  benchmark  replicate IAE comparison -> report JSON
  classify   labeled CSV -> summary JSON + per-row scores CSV
  serve      HTTP density service over a model JSON
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError as PydanticValidationError

from .config import AppConfig, load_config
from .errors import ModelFormatError, ValidationError, VineKDEError
from .estimation.vinefit import FitOptions, describe_model, eval_vine_density, fit_vine
from .evaluation.benchmark import run_scenario
from .evaluation.classification import (
    ClassificationOptions,
    Estimator,
    run_classification,
    split_positional,
    subsample_per_class,
)
from .ingestion.csv_loader import FLOAT_FORMAT, load_labeled_csv, read_numeric_csv, write_numeric_csv
from .logging_config import configure_logging
from .simulation.targets import ScenarioKind, ScenarioSpec, sample
from .storage.model_store import dump_json_bytes, load_model, save_model
from .storage.report_store import save_report

logger = logging.getLogger(__name__)

PROG = "vinekde"
MAX_SEED = 2 ** 64 - 1


class UsageError(ValidationError):
    category = "bad-flag"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _bounded_int(minimum: int, maximum: Optional[int] = None):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
        if value < minimum or (maximum is not None and value > maximum):
            upper = f" and <= {maximum}" if maximum is not None else ""
            raise argparse.ArgumentTypeError(f"must be >= {minimum}{upper}, got {value}")
        return value

    return parse


def _open_unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {value}")
    return value


def _unit(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}")
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


seed_type = _bounded_int(0, MAX_SEED)
count_type = _bounded_int(1)
dimension_type = _bounded_int(2)


def _add_independence_flags(parser: argparse.ArgumentParser) -> None:
    # unset means the configured default
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--independence-test", dest="independence_test", action="store_const", const=True)
    group.add_argument("--no-independence-test", dest="independence_test", action="store_const", const=False)
    parser.set_defaults(independence_test=None)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML configuration file")
    common.add_argument("--threads", type=count_type, help="worker threads (env VINEKDE_THREADS)")

    parser = _Parser(prog=PROG, description="Nonparametric vine-copula density estimation")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    fit = sub.add_parser("fit", parents=[common], help="fit a vine density model to a CSV")
    fit.add_argument("--input", type=Path, required=True)
    fit.add_argument("--output", type=Path, required=True)
    fit.add_argument("--margin-bw-mult", type=_positive)
    _add_independence_flags(fit)
    fit.add_argument("--independence-level", type=_open_unit)
    fit.add_argument("--literal-hfunc", action="store_true", help="use the unnormalized h-function form")

    density = sub.add_parser("density", parents=[common], help="evaluate a fitted model at CSV points")
    density.add_argument("--model", type=Path, required=True)
    density.add_argument("--input", type=Path, required=True)
    density.add_argument("--out", type=Path, required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="draw a sample from a simulation scenario")
    simulate.add_argument("--scenario", choices=[k.value for k in ScenarioKind], required=True)
    simulate.add_argument("--d", type=dimension_type, required=True)
    simulate.add_argument("--n", type=count_type, required=True)
    simulate.add_argument("--seed", type=seed_type, required=True)
    simulate.add_argument("--tau", type=float)
    simulate.add_argument("--out", type=Path, required=True)

    bench = sub.add_parser("benchmark", parents=[common], help="compare vine and classical estimators by IAE")
    bench.add_argument("--scenario", choices=[k.value for k in ScenarioKind], required=True)
    bench.add_argument("--d", type=dimension_type, required=True)
    bench.add_argument("--n", type=count_type, required=True)
    bench.add_argument("--reps", type=count_type)
    bench.add_argument("--mc", type=count_type)
    bench.add_argument("--seed", type=seed_type, required=True)
    bench.add_argument("--tau", type=float)
    _add_independence_flags(bench)
    bench.add_argument("--record-timing", action="store_true")
    bench.add_argument("--out", type=Path, required=True)

    classify = sub.add_parser("classify", parents=[common], help="density-based Bayes classification")
    classify.add_argument("--data", type=Path, required=True)
    classify.add_argument("--label-col")
    classify.add_argument("--split", type=_open_unit)
    classify.add_argument("--estimator", choices=[e.value for e in Estimator], default=Estimator.VINE.value)
    classify.add_argument("--subsample", type=count_type, help="first K training rows per class")
    classify.add_argument("--no-header", action="store_true", help="raw file without a header row")
    classify.add_argument("--prior-g", type=_unit)
    classify.add_argument("--margin-bw-mult", type=_positive)
    classify.add_argument("--independence-level", type=_open_unit)
    _add_independence_flags(classify)
    classify.add_argument("--out", type=Path, required=True)
    classify.add_argument("--scores", type=Path)

    serve = sub.add_parser("serve", parents=[common], help="serve a model over HTTP")
    serve.add_argument("--model", type=Path, required=True)
    serve.add_argument("--host")
    serve.add_argument("--port", type=_bounded_int(1, 65535))
    return parser


def _fit_options(args, config: AppConfig, threads: int) -> FitOptions:
    est = config.estimation
    return FitOptions(
        margin_bandwidth_multiplier=getattr(args, "margin_bw_mult", None) or est.margin_bandwidth_multiplier,
        independence_test=est.independence_test if args.independence_test is None else args.independence_test,
        independence_level=getattr(args, "independence_level", None) or est.independence_level,
        hfunc_normalized=not getattr(args, "literal_hfunc", False) and est.hfunc_normalized,
        threads=threads,
        chunk_size=est.chunk_size,
    )


def cmd_fit(args, config: AppConfig, threads: int) -> None:
    data, columns = read_numeric_csv(args.input)
    model = fit_vine(data, _fit_options(args, config, threads))
    logger.info(f"Model summary: {describe_model(model)['edges']}")
    save_model(model, args.output)


def cmd_density(args, config: AppConfig, threads: int) -> None:
    model = load_model(args.model)
    points, _ = read_numeric_csv(args.input)
    densities = eval_vine_density(model, points, config.estimation.chunk_size, threads)
    write_numeric_csv(args.out, densities[:, None], ["density"])


def cmd_simulate(args, config: AppConfig, threads: int) -> None:
    tau = config.benchmark.tau if args.tau is None else args.tau
    spec = ScenarioSpec(kind=args.scenario, d=args.d, tau=tau)
    data = sample(spec, args.n, args.seed)
    write_numeric_csv(args.out, data, [f"x{j + 1}" for j in range(args.d)])


def cmd_benchmark(args, config: AppConfig, threads: int) -> None:
    bench = config.benchmark
    spec = ScenarioSpec(kind=args.scenario, d=args.d, tau=bench.tau if args.tau is None else args.tau)
    report = run_scenario(
        spec,
        n=args.n,
        replicates=args.reps or bench.replicates,
        mc_samples=args.mc or bench.mc_samples,
        seed=args.seed,
        fit_options=_fit_options(args, config, 1),
        threads=threads,
        significance_level=bench.significance_level,
    )
    save_report(report, args.out, record_timing=args.record_timing)


def cmd_classify(args, config: AppConfig, threads: int) -> None:
    cls = config.classification
    label_column = args.label_col or cls.label_column
    dataset = load_labeled_csv(
        args.data,
        label_column=label_column,
        header=not args.no_header,
        column_names=cls.magic_columns if args.no_header else None,
    )
    train, test = split_positional(dataset, args.split or cls.split)
    if args.subsample:
        train = subsample_per_class(train, args.subsample)
    options = ClassificationOptions(
        estimator=args.estimator,
        margin_bandwidth_multiplier=args.margin_bw_mult or cls.margin_bandwidth_multiplier,
        independence_test=cls.independence_test if args.independence_test is None else args.independence_test,
        independence_level=args.independence_level or cls.independence_level,
        prior_g=cls.prior_g if args.prior_g is None else args.prior_g,
        fpr_targets=cls.fpr_targets,
        threads=threads,
        chunk_size=config.estimation.chunk_size,
    )
    result = run_classification(train, test, options)
    Path(args.out).write_bytes(dump_json_bytes(result.summary))
    if args.scores:
        scores = pd.DataFrame({
            "row": np.arange(test.n),
            "label": result.labels,
            "f_g": result.f_g,
            "f_h": result.f_h,
            "posterior": result.posteriors,
        })
        scores.to_csv(args.scores, index=False, float_format=FLOAT_FORMAT)


def cmd_serve(args, config: AppConfig, threads: int) -> None:
    import uvicorn

    from .serving.api_server import create_app

    app = create_app(load_model(args.model), threads=threads)
    uvicorn.run(app, host=args.host or config.serving.host, port=args.port or config.serving.port)


COMMANDS = {
    "fit": cmd_fit,
    "density": cmd_density,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "classify": cmd_classify,
    "serve": cmd_serve,
}


def _report(category: str, message: str) -> None:
    first_line = str(message).splitlines()[0] if str(message) else ""
    print(f"{PROG}: error[{category}]: {first_line}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config)
        configure_logging(config.monitoring.log_level, config.monitoring.json_logs)
        threads = args.threads or config.runtime.threads
        COMMANDS[args.command](args, config, threads)
        return 0
    except FileNotFoundError as e:
        _report("missing-file", str(e))
        return 1
    except ModelFormatError as e:
        _report("schema", str(e))
        return 1
    except ValidationError as e:
        _report(e.category, str(e))
        return 1
    except VineKDEError as e:
        _report("runtime", str(e))
        return 2
    except PydanticValidationError as e:
        _report("validation", str(e))
        return 1
    except Exception as e:
        logger.exception("Unexpected failure")
        _report("runtime", f"{type(e).__name__}: {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())

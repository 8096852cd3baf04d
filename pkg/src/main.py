import argparse
import json
import sys
from typing import Any, Dict, List, Optional

from src.config import settings, logger
from src.exceptions import HDInferError
from src.pipeline import RunConfig, InferencePipeline
from src.storage.result_writer import ResultWriter
from src.utils.logging import setup_logging

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_PIPELINE_ERROR = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default="results", help="Output directory (default: results)")
    parser.add_argument("--threads", type=int, help="Worker threads (default: all cores)")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    parser.add_argument("--seed", type=int, default=0, help="Seed of the bootstrap, CV folds and splits")
    parser.add_argument("--bootstrap-draws", type=int, default=settings.BOOTSTRAP_DRAWS,
                        help="Number of bootstrap draws B")


def _add_data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x", required=True, help="Headerless CSV design matrix")
    parser.add_argument("--y", required=True, help="Headerless single-column CSV response")
    parser.add_argument("--nodewise-lambda", type=float, help="Shared nodewise penalty (default: CV choice)")


def _add_testing(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.05, help="Level")
    parser.add_argument("--group", default="all",
                        help="1-based group: 'all', '1,3,5-9', 'complement:1-3' (terms joined by '+')")
    parser.add_argument("--beta-null", help="Hypothesised coefficients: one value or p comma-separated values")
    parser.add_argument("--studentized", action="store_true", help="Use the studentized statistic")
    parser.add_argument("--intervals", action="store_true", help="Also report simultaneous intervals")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdinfer",
                                     description="Simultaneous inference for high-dimensional models")
    subcommands = parser.add_subparsers(dest="command", required=True)

    fit = subcommands.add_parser("fit", help="De-sparsified Lasso fit")
    _add_data(fit)
    _add_common(fit)

    test = subcommands.add_parser("test", help="Simultaneous tests, recovery and step-down")
    _add_data(test)
    _add_testing(test)
    test.add_argument("--sided", choices=["one", "two"], default="two", help="One- or two-sided statistic")
    test.add_argument("--method", choices=["single", "three-step", "stepdown", "recover", "ex"], default="single")
    test.add_argument("--screen", choices=["marginal", "iterative"], default="marginal",
                      help="Screening for the three-step test")
    test.add_argument("--c0", type=float, default=0.2, help="Screening fraction of the sample split")
    test.add_argument("--tau", type=float, default=2.0, help="Support recovery threshold constant")
    _add_common(test)

    glm = subcommands.add_parser("glm-test", help="Simultaneous test for a convex-loss model")
    _add_data(glm)
    _add_testing(glm)
    glm.add_argument("--loss", choices=["logistic", "squared"], default="logistic")
    _add_common(glm)

    simulate = subcommands.add_parser("simulate", help="Run a simulation scenario")
    simulate.add_argument("--scenario", required=True, help="Scenario key=value file")
    simulate.add_argument("--reps", type=int, help="Replications (overrides the scenario file)")
    _add_common(simulate)

    rerun = subcommands.add_parser("rerun", help="Repeat a run from the config embedded in an artifact")
    rerun.add_argument("artifact", help="JSON artifact written by an earlier run")
    rerun.add_argument("--out", default="results", help="Output directory (default: results)")
    rerun.add_argument("--threads", type=int, help="Worker threads (default: all cores)")
    rerun.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.command == "rerun":
        return RunConfig.from_artifact(args.artifact, out=args.out, threads=args.threads, log_level=args.log_level)
    values: Dict[str, Any] = {key: value for key, value in vars(args).items() if value is not None}
    return RunConfig.build(**values)


def _report_error(payload: Dict[str, Any], out: str) -> None:
    print(json.dumps(payload, sort_keys=True))
    try:
        ResultWriter(out, {}).write_error(payload)
    except OSError:
        logger.error(f"Could not write error.json to {out}", exc_info=True)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, settings.LOG_FORMAT)
    try:
        config = config_from_args(args)
        result = InferencePipeline(config).run()
    except HDInferError as e:
        logger.error(f"{e.code}: {e.message}")
        _report_error(e.to_dict(), args.out)
        return EXIT_PIPELINE_ERROR
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        _report_error({"error": type(e).__name__, "message": str(e)}, args.out)
        return EXIT_UNEXPECTED

    print(json.dumps(result, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""
Command-line interface: ``fit``, ``sweep`` and ``gof`` over one paired-comparison data set.

Exit codes: 0 success, 2 configuration error, 3 input error, 4 estimation error.
"""

import argparse
import logging
import os
from concurrent.futures import ThreadPoolExecutor, as_completed

from pydantic import ValidationError
from tqdm import tqdm

from ..bayes.posterior import PriorKind
from ..data.comparison_data import load_bundled_journals, load_counts
from ..errors import ConfigurationError, DataParseError, PairedComparisonError
from ..inference.fit_analysis import Estimator, fit, run_label, summarize_gof, sweep_rows
from ..model.preference_model import ModelKind
from ..report_generation.report_generator import ReportGenerator
from .config import InputFormat, OutputFormat, RunConfig, environment_defaults, parse_nu_list

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

EXIT_OK = 0


def _common_arguments():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--input", help="Count file (defaults to the bundled journal citation data)")
    parser.add_argument("--format", choices=[f.value for f in InputFormat], default=InputFormat.MATRIX.value,
                        help="Layout of the count file")
    parser.add_argument("--model", choices=[k.value for k in ModelKind], default=ModelKind.TPCM.value,
                        help="Preference model")
    parser.add_argument("--nu", help="Comma-separated degrees of freedom (default 1,2,3,4,15,30)")
    parser.add_argument("--prior", choices=["uniform", "jeffreys", "both"], default="both")
    parser.add_argument("--estimator", choices=["mean", "mode", "both"], default="both")
    parser.add_argument("--grid-points", type=int, help="Gauss-Legendre nodes per free coordinate")
    parser.add_argument("--halfwidth", type=float,
                        help="Quadrature half-width per coordinate, in posterior standard deviations")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--emit", action="append", choices=[f.value for f in OutputFormat],
                        help="Output format; repeat for several (default json and table)")
    parser.add_argument("--jobs", type=int, help="Number of runs to execute concurrently")
    parser.add_argument("--rounded-expected", action="store_true",
                        help="Round expected frequencies to integers before the chi-square statistic")
    parser.add_argument("--marginals", action="store_true", help="Also evaluate marginal posterior curves")
    parser.add_argument("--fit-threshold", type=float, default=0.15,
                        help="p-value above which a run is flagged as fitting well (gof)")
    parser.add_argument("--log-level", default=os.getenv("PAIRED_COMPARISON_LOG_LEVEL", "INFO"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def build_parser():
    common = _common_arguments()
    parser = argparse.ArgumentParser(prog="paired-comparison",
                                     description="Bayesian ranking from paired-comparison counts")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("fit", parents=[common], help="Full analysis for every (nu, prior) combination")
    subparsers.add_parser("sweep", parents=[common], help="Worth estimates as functions of nu (plot data)")
    subparsers.add_parser("gof", parents=[common], help="Chi-square goodness of fit across nu and priors")
    return parser


def config_from_args(args):
    """
    Merge defaults, environment overrides and command-line flags into a RunConfig.

    Raises:
        ConfigurationError: If any setting is invalid
    """
    values = environment_defaults()
    values.update(
        input_path=args.input,
        input_format=args.format,
        model=args.model,
        priors=(PriorKind.UNIFORM, PriorKind.JEFFREYS) if args.prior == "both" else (args.prior,),
        estimators=(Estimator.MEAN, Estimator.MODE) if args.estimator == "both" else (args.estimator,),
        rounded_expected=args.rounded_expected,
        marginals=args.marginals,
        fit_threshold=args.fit_threshold,
    )
    if args.nu is not None:
        values["nu_values"] = parse_nu_list(args.nu)
    optional = {"grid_points_per_dim": args.grid_points, "grid_halfwidth": args.halfwidth,
                "output_dir": args.out, "jobs": args.jobs}
    values.update({key: value for key, value in optional.items() if value is not None})
    if args.emit:
        values["formats"] = tuple(dict.fromkeys(args.emit))
    try:
        config = RunConfig(**values)
        config.posterior_specs()
    except ValidationError as e:
        raise ConfigurationError(str(e)) from e
    return config


def load_data(config: RunConfig):
    """
    Load the configured count file, or the bundled journal data when none is given.

    Raises:
        DataParseError: If the file cannot be read or parsed
    """
    if config.input_path is None:
        logger.info("Using the bundled journal citation data")
        return load_bundled_journals()
    try:
        with open(config.input_path, "rb") as handle:
            content = handle.read()
    except OSError as e:
        logger.error(f"Error reading {config.input_path}: {str(e)}")
        raise DataParseError(f"cannot read input file {config.input_path}: {e.strerror}") from e
    return load_counts(content, config.input_format.count_format)


def run_fits(data, config: RunConfig, on_report=None):
    """
    Fit every (nu, prior) combination of the configuration.

    Runs execute on ``config.jobs`` threads; a failing run is logged and skipped so the
    remaining runs still complete.

    Args:
        data (PairedComparisonData): Counts to analyse
        config (RunConfig): Run settings
        on_report (callable, optional): Called with each FitReport as soon as it is ready

    Returns:
        tuple: (reports in configuration order, list of (run label, error) failures)
    """
    specs = config.posterior_specs()
    logger.info(f"Running {len(specs)} posterior analyses with {config.jobs} worker(s)")
    results = {}
    failures = []
    with ThreadPoolExecutor(max_workers=config.jobs) as executor:
        futures = {
            executor.submit(fit, data, spec, config.estimators, config.rounded_expected, config.marginals): index
            for index, spec in enumerate(specs)
        }
        for future in tqdm(as_completed(futures), total=len(futures), desc="posterior runs", disable=None):
            index = futures[future]
            label = run_label(specs[index])
            try:
                report = future.result()
            except PairedComparisonError as e:
                logger.error(f"Run {label} failed: {str(e)}")
                failures.append((label, e))
                continue
            results[index] = report
            if on_report is not None:
                on_report(report)
    reports = [results[index] for index in sorted(results)]
    failures.sort(key=lambda failure: failure[0])
    return reports, failures


def _exit_code(failures):
    return max((error.exit_code for _, error in failures), default=EXIT_OK)


def cmd_fit(config: RunConfig):
    """Write one report per (nu, prior) run; partial results survive failed runs."""
    data = load_data(config)
    generator = ReportGenerator(config.output_dir)
    formats = [f.value for f in config.formats]
    reports, failures = run_fits(data, config, on_report=lambda report: generator.save_fit(report, formats))
    logger.info(f"Wrote {len(reports)} fit reports to {config.output_dir}")
    return _exit_code(failures)


def cmd_sweep(config: RunConfig):
    """Write nu-sweep plot data, one CSV per (prior, estimator)."""
    if config.model is not ModelKind.TPCM:
        raise ConfigurationError("sweep varies nu and needs the t model")
    data = load_data(config)
    generator = ReportGenerator(config.output_dir)
    reports, failures = run_fits(data, config)
    if reports:
        generator.save_sweep(sweep_rows(reports), data.n_objects)
    return _exit_code(failures)


def cmd_gof(config: RunConfig):
    """Write the goodness-of-fit summary sorted by p-value."""
    data = load_data(config)
    generator = ReportGenerator(config.output_dir)
    reports, failures = run_fits(data, config)
    rows = summarize_gof(reports, threshold=config.fit_threshold)
    if rows:
        generator.save_gof(rows, [f.value for f in config.formats])
        best = [f"{row.nu:g}" if row.nu is not None else row.model for row in rows if row.best_fit]
        logger.info(f"Best fitting (p > {config.fit_threshold}): {', '.join(best) or 'none'}")
    return _exit_code(failures)


COMMANDS = {"fit": cmd_fit, "sweep": cmd_sweep, "gof": cmd_gof}


def run(argv=None):
    """
    Parse arguments, run the selected command and return its exit code.
    """
    args = build_parser().parse_args(argv)
    logging.getLogger().setLevel(args.log_level)
    try:
        config = config_from_args(args)
        return COMMANDS[args.command](config)
    except PairedComparisonError as e:
        logger.error(f"{type(e).__name__}: {str(e)}")
        return e.exit_code

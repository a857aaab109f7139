"""
Decision-layer quantities computed from posterior estimates: plug-in preference
matrices, expected frequencies, the chi-square goodness of fit and the ranking.
"""

import logging
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..bayes.posterior import MarginalCurve, PosteriorAnalyzer, PosteriorSpec
from ..errors import GoodnessOfFitError
from ..model.preference_model import ModelKind, ModelSpec, WorthVector, preference_probability
from ..special.special_functions import chi_square_sf

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12

Matrix = Tuple[Tuple[Optional[float], ...], ...]


class Estimator(str, Enum):
    MEAN = "mean"
    MODE = "mode"


class GoodnessOfFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    chi_square: float
    df: int
    p_value: Optional[float]
    rounded_expected: bool = False
    excluded_pairs: Tuple[Tuple[str, str], ...] = ()


class Ranking(BaseModel):
    """Labels by descending worth; ties keep input order and set ``tied``."""

    model_config = ConfigDict(frozen=True)

    order: Tuple[str, ...]
    tied: bool = False
    tied_groups: Tuple[Tuple[str, ...], ...] = ()


class EstimatorAssessment(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimator: Estimator
    estimate: WorthVector
    preference_matrix: Matrix
    expected_frequencies: Matrix
    chi_square: float
    df: int
    p_value: Optional[float]
    ranking: Tuple[str, ...]
    tied: bool


class FitReport(BaseModel):
    """
    Everything one (model, prior) analysis produces.

    The top-level preference matrix, expected frequencies, chi-square and ranking
    belong to ``primary_estimator``; every requested estimator also has its own entry
    in ``assessments``. Undefined entries (diagonals, pairs never compared) are None.
    """

    model_config = ConfigDict(frozen=True)

    spec: PosteriorSpec
    labels: Tuple[str, ...]
    wins: Tuple[Tuple[int, ...], ...]
    observed_preference_matrix: Matrix
    estimates: Dict[Estimator, WorthVector]
    assessments: Dict[Estimator, EstimatorAssessment]
    primary_estimator: Estimator
    preference_matrix: Matrix
    predictive_matrix: Matrix
    expected_frequencies: Matrix
    chi_square: float
    df: int
    p_value: Optional[float]
    ranking: Tuple[str, ...]
    tied: bool
    rounded_expected: bool = False
    log_normalizer: float
    truncation_warning: bool = False
    shell_mass: float = 0.0
    clamp_events: int = 0
    marginals: Dict[str, MarginalCurve] = {}
    notes: Tuple[str, ...] = ()


def as_matrix(array) -> Matrix:
    """Convert an n x n array to nested tuples, NaN becoming None."""
    array = np.asarray(array, dtype=float)
    return tuple(tuple(None if np.isnan(v) else float(v) for v in row) for row in array)


def _estimate_array(estimate):
    return estimate.as_array() if isinstance(estimate, WorthVector) else np.asarray(estimate, dtype=float)


def preference_matrix(estimate, model: ModelSpec):
    """
    Plug-in preference probabilities ψ_ij at a point estimate.

    Returns:
        numpy.ndarray: n x n matrix with NaN on the diagonal
    """
    theta = _estimate_array(estimate)
    matrix = preference_probability(model, theta[:, None], theta[None, :])
    matrix = np.array(matrix, dtype=float)
    upper = np.triu_indices(theta.size, k=1)
    matrix[upper[1], upper[0]] = 1.0 - matrix[upper]
    np.fill_diagonal(matrix, np.nan)
    return matrix


def predictive_matrix(data, spec: PosteriorSpec):
    """Posterior predictive preference probabilities η_lm."""
    predictive = PosteriorAnalyzer(data, spec).predictive_matrix()
    return np.array([[np.nan if v is None else v for v in row] for row in predictive])


def expected_frequencies(data, estimate, model: ModelSpec):
    """
    Expected win counts r̂_ij = n_ij ψ_ij.

    Returns:
        numpy.ndarray: Real-valued n x n matrix, NaN on the diagonal
    """
    return data.comparisons * preference_matrix(estimate, model)


def chi_square_gof(data, estimate, model: ModelSpec, rounded_expected=False):
    """
    Chi-square goodness of fit of a point estimate.

    Args:
        data (PairedComparisonData): Observed counts
        estimate (WorthVector or array-like): Worths to assess
        model (ModelSpec): Preference model
        rounded_expected (bool): Round expected frequencies to integers before the statistic

    Returns:
        GoodnessOfFit: Statistic over compared pairs, df = (n-1)(n-2)/2 and the p-value
            (None when df = 0)

    Raises:
        GoodnessOfFitError: If an expected frequency is not positive for a compared pair
    """
    expected = expected_frequencies(data, estimate, model)
    if rounded_expected:
        expected = np.rint(expected)

    statistic = 0.0
    excluded = []
    for i, j in data.all_pairs():
        if data.comparisons[i, j] == 0:
            excluded.append((data.labels[i], data.labels[j]))
            continue
        for a, b in ((i, j), (j, i)):
            if not (expected[a, b] > 0):
                logger.error(f"Expected frequency for {data.labels[a]} over {data.labels[b]} is {expected[a, b]}")
                raise GoodnessOfFitError(
                    f"degenerate expected frequency for {data.labels[a]} over {data.labels[b]}")
            statistic += (data.wins[a, b] - expected[a, b]) ** 2 / expected[a, b]

    n = data.n_objects
    df = (n - 1) * (n - 2) // 2
    p_value = float(chi_square_sf(statistic, df)) if df > 0 else None
    if excluded:
        logger.warning(f"{len(excluded)} uncompared pairs excluded from the chi-square statistic")
    return GoodnessOfFit(chi_square=float(statistic), df=df, p_value=p_value,
                         rounded_expected=rounded_expected, excluded_pairs=tuple(excluded))


def rank_objects(estimate, labels: Optional[Sequence[str]] = None):
    """
    Order objects by descending worth.

    Args:
        estimate (WorthVector or array-like): Worths
        labels (Sequence[str], optional): Needed when ``estimate`` is a plain array

    Returns:
        Ranking: Ordered labels, with tie information
    """
    theta = _estimate_array(estimate)
    if labels is None:
        labels = estimate.labels
    order = np.argsort(-theta, kind="stable")

    groups: List[List[str]] = [[labels[order[0]]]]
    for previous, current in zip(order[:-1], order[1:]):
        if abs(theta[previous] - theta[current]) <= TIE_TOLERANCE:
            groups[-1].append(labels[current])
        else:
            groups.append([labels[current]])
    tied_groups = tuple(tuple(group) for group in groups if len(group) > 1)
    if tied_groups:
        logger.warning(f"Tied worths: {tied_groups}")
    return Ranking(order=tuple(labels[k] for k in order), tied=bool(tied_groups), tied_groups=tied_groups)


def assess_estimate(data, estimate: WorthVector, model: ModelSpec, estimator: Estimator, rounded_expected=False):
    gof = chi_square_gof(data, estimate, model, rounded_expected=rounded_expected)
    ranking = rank_objects(estimate)
    return EstimatorAssessment(
        estimator=estimator,
        estimate=estimate,
        preference_matrix=as_matrix(preference_matrix(estimate, model)),
        expected_frequencies=as_matrix(expected_frequencies(data, estimate, model)),
        chi_square=gof.chi_square,
        df=gof.df,
        p_value=gof.p_value,
        ranking=ranking.order,
        tied=ranking.tied,
    )


def fit(data, spec: PosteriorSpec, estimators: Sequence[Estimator] = (Estimator.MEAN, Estimator.MODE),
        rounded_expected=False, marginals=False, analyzer=None):
    """
    Run one complete posterior analysis.

    Args:
        data (PairedComparisonData): Observed counts
        spec (PosteriorSpec): Model, prior and quadrature settings
        estimators (Sequence[Estimator]): Point estimates to assess; the first mean-or-mode
            present (mean preferred) becomes the primary estimator
        rounded_expected (bool): Use integer expected frequencies in the chi-square statistic
        marginals (bool): Also evaluate marginal posterior curves
        analyzer (PosteriorAnalyzer, optional): Reuse an existing analyzer for this data and spec

    Returns:
        FitReport: The assembled report
    """
    estimators = [Estimator(e) for e in estimators] or [Estimator.MEAN, Estimator.MODE]
    logger.info(f"Fitting {spec.model.name} with {spec.prior.value} prior")
    analyzer = analyzer or PosteriorAnalyzer(data, spec)
    summary = analyzer.summarize(marginals=marginals)

    estimates = {Estimator.MEAN: summary.mean, Estimator.MODE: summary.mode}
    assessments = {}
    for estimator in (Estimator.MEAN, Estimator.MODE):
        if estimator in estimators:
            assessments[estimator] = assess_estimate(data, estimates[estimator], spec.model, estimator,
                                                     rounded_expected=rounded_expected)
    primary = Estimator.MEAN if Estimator.MEAN in assessments else Estimator.MODE
    chosen = assessments[primary]

    notes = []
    uncompared = [(data.labels[i], data.labels[j]) for i, j in data.all_pairs() if data.comparisons[i, j] == 0]
    if uncompared:
        notes.append(f"pairs never compared, excluded from chi-square: {uncompared}")
    if summary.truncation_warning:
        notes.append(f"truncation bound too tight: {summary.shell_mass:.4%} of mass in outermost grid shell")
    if summary.clamp_events:
        notes.append(f"{summary.clamp_events} preference probabilities clamped")
    if chosen.tied:
        notes.append("ranking contains ties; tied objects keep input order")
    if rounded_expected:
        notes.append("chi-square computed from expected frequencies rounded to integers")

    report = FitReport(
        spec=spec,
        labels=data.labels,
        wins=tuple(tuple(int(v) for v in row) for row in data.wins),
        observed_preference_matrix=as_matrix(data.observed_preference_matrix()),
        estimates=estimates,
        assessments=assessments,
        primary_estimator=primary,
        preference_matrix=chosen.preference_matrix,
        predictive_matrix=summary.predictive,
        expected_frequencies=chosen.expected_frequencies,
        chi_square=chosen.chi_square,
        df=chosen.df,
        p_value=chosen.p_value,
        ranking=chosen.ranking,
        tied=chosen.tied,
        rounded_expected=rounded_expected,
        log_normalizer=summary.log_normalizer,
        truncation_warning=summary.truncation_warning,
        shell_mass=summary.shell_mass,
        clamp_events=summary.clamp_events,
        marginals=summary.marginal_grids,
        notes=tuple(notes),
    )
    logger.info(f"Fit complete: chi-square {report.chi_square:.5f}, ranking {' > '.join(report.ranking)}")
    return report


def run_label(spec: PosteriorSpec):
    """Short identifier used in file names, e.g. ``t-nu2-uniform``."""
    if spec.model.kind is ModelKind.TPCM:
        return f"t-nu{spec.model.nu:g}-{spec.prior.value}"
    return f"{spec.model.kind.value}-{spec.prior.value}"


class GofRow(BaseModel):
    """One line of the goodness-of-fit summary across runs."""

    model_config = ConfigDict(frozen=True)

    model: str
    nu: Optional[float]
    prior: str
    estimator: Estimator
    chi_square: float
    df: int
    p_value: Optional[float]
    best_fit: bool = False


def summarize_gof(reports: Sequence[FitReport], threshold=0.15):
    """
    Collect the primary-estimator chi-square of every report, sorted by p-value descending.

    Runs with p > threshold are flagged as best fitting. Runs without a p-value sort last.
    """
    rows = [
        GofRow(model=report.spec.model.kind.value, nu=report.spec.model.nu, prior=report.spec.prior.value,
               estimator=report.primary_estimator, chi_square=report.chi_square, df=report.df,
               p_value=report.p_value,
               best_fit=report.p_value is not None and report.p_value > threshold)
        for report in reports
    ]
    return sorted(rows, key=lambda row: (row.p_value is None, -(row.p_value or 0.0)))


def sweep_rows(reports: Sequence[FitReport]):
    """
    Worth estimates as functions of nu, keyed by (prior, estimator).

    Returns:
        dict: (prior, estimator) -> list of (nu, theta_1, …, theta_n) tuples in ascending nu
    """
    table = {}
    for report in reports:
        for estimator, assessment in report.assessments.items():
            key = (report.spec.prior.value, estimator.value)
            table.setdefault(key, []).append((report.spec.model.nu,) + assessment.estimate.theta)
    return {key: sorted(rows, key=lambda row: row[0]) for key, rows in sorted(table.items())}

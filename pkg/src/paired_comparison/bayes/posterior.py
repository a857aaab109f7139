import logging
import math
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from ..errors import ConfigurationError, EstimationError
from ..model.preference_model import ModelSpec, PreferenceModel, WorthVector
from .quadrature import DEFAULT_CHUNK_SIZE, GaussLegendreGrid, expand_reduced, expansion_matrix

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-300
PROBABILITY_CEILING = 1.0 - 1e-16
MIN_GRID_POINTS = 16
TRUNCATION_MASS = 1e-3
GRADIENT_TOLERANCE = 1e-8
POLISH_ITERATIONS = 50
MODE_STARTS = 5
START_SCALE = 0.5
DEFAULT_CURVE_POINTS = 201
# modes beyond this magnitude are a climb along a flat ridge, not a maximum
MAX_WORTH = 1e4


class PriorKind(str, Enum):
    UNIFORM = "uniform"
    JEFFREYS = "jeffreys"


class PosteriorSpec(BaseModel):
    """Prior, preference model and quadrature settings of one posterior analysis."""

    model_config = ConfigDict(frozen=True)

    prior: PriorKind = PriorKind.UNIFORM
    model: ModelSpec
    grid_points_per_dim: int = 48
    # half-width of the quadrature box per free coordinate, in posterior standard deviations
    grid_halfwidth: float = 10.0

    @field_validator("grid_points_per_dim")
    @classmethod
    def _check_points(cls, value):
        if value < MIN_GRID_POINTS:
            raise ConfigurationError(f"grid_points_per_dim must be at least {MIN_GRID_POINTS}, got {value}")
        return value

    @field_validator("grid_halfwidth")
    @classmethod
    def _check_halfwidth(cls, value):
        if not (math.isfinite(value) and value > 0):
            raise ConfigurationError(f"grid_halfwidth must be positive, got {value}")
        return value


class MarginalCurve(BaseModel):
    """Sampled marginal posterior density of one worth parameter."""

    model_config = ConfigDict(frozen=True)

    label: str
    theta: Tuple[float, ...]
    density: Tuple[float, ...]

    def integral(self):
        return float(trapezoid(self.density, self.theta))

    def mean(self):
        theta = np.asarray(self.theta)
        density = np.asarray(self.density)
        return float(trapezoid(theta * density, theta) / trapezoid(density, theta))


class PosteriorSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean: WorthVector
    mode: WorthVector
    log_normalizer: float
    marginal_grids: Dict[str, MarginalCurve] = {}
    predictive: Tuple[Tuple[Optional[float], ...], ...] = ()
    truncation_warning: bool = False
    shell_mass: float = 0.0
    clamp_events: int = 0


class GridIntegrals(BaseModel):
    """Everything accumulated in one pass over the quadrature grid."""

    model_config = ConfigDict(frozen=True)

    mean: Tuple[float, ...]
    predictive: Tuple[Tuple[Optional[float], ...], ...]
    log_normalizer: float
    shell_mass: float


class ComparedPairs:
    """
    Unordered pairs with at least one comparison, laid out for vectorised evaluation.

    ``design`` maps full worth vectors onto pair differences d_p = θ_i - θ_j and
    ``reduced_design`` does the same for the n - 1 free coordinates.
    """

    def __init__(self, data):
        pairs = data.compared_pairs()
        self.first = np.array([i for i, _ in pairs], dtype=int)
        self.second = np.array([j for _, j in pairs], dtype=int)
        self.wins = data.wins[self.first, self.second].astype(float)
        self.losses = data.wins[self.second, self.first].astype(float)
        self.counts = self.wins + self.losses

        rows = np.arange(len(pairs))
        self.design = np.zeros((len(pairs), data.n_objects))
        self.design[rows, self.first] = 1.0
        self.design[rows, self.second] = -1.0
        self.reduced_design = self.design @ expansion_matrix(data.n_objects)

    def __len__(self):
        return self.first.size

    def differences(self, theta):
        return np.asarray(theta, dtype=float) @ self.design.T


def _theta_array(theta):
    values = theta.as_array() if isinstance(theta, WorthVector) else np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(values)):
        raise EstimationError("worth vector must be finite")
    return values


class PreferenceLikelihood:
    """
    Pointwise log-likelihood, Jeffreys prior and log posterior kernel.

    Every evaluation accepts a single worth vector or a batch of shape (..., n).
    Probabilities are clamped to [PROBABILITY_FLOOR, PROBABILITY_CEILING] and each
    clamp is counted in ``clamp_events``.
    """

    def __init__(self, data, model: ModelSpec, prior=PriorKind.UNIFORM):
        self.data = data
        self.prior = PriorKind(prior)
        self.model = PreferenceModel(model)
        self.pairs = ComparedPairs(data)
        self.clamp_events = 0

    @property
    def n_objects(self):
        return self.data.n_objects

    def _probabilities(self, d):
        psi, complement = self.model.pair(d)
        clamped = ((psi < PROBABILITY_FLOOR) | (psi > PROBABILITY_CEILING)
                   | (complement < PROBABILITY_FLOOR) | (complement > PROBABILITY_CEILING))
        count = int(np.count_nonzero(clamped))
        if count:
            self.clamp_events += count
            logger.debug(f"Clamped {count} preference probabilities")
        return (np.clip(psi, PROBABILITY_FLOOR, PROBABILITY_CEILING),
                np.clip(complement, PROBABILITY_FLOOR, PROBABILITY_CEILING))

    def _log_likelihood_terms(self, psi, complement):
        return np.log(psi) @ self.pairs.wins + np.log(complement) @ self.pairs.losses

    def _jeffreys_terms(self, d, psi, complement):
        density = self.model.density(d)
        weights = density * density / (psi * complement) * self.pairs.counts
        reduced = self.pairs.reduced_design
        information = np.einsum("...p,pa,pb->...ab", weights, reduced, reduced)
        sign, log_det = np.linalg.slogdet(information)
        return np.where(sign > 0, 0.5 * log_det, -np.inf)

    def log_kernel_batch(self, theta):
        """Log posterior kernel for full worth vectors of shape (..., n)."""
        d = self.pairs.differences(theta)
        psi, complement = self._probabilities(d)
        value = self._log_likelihood_terms(psi, complement)
        if self.prior is PriorKind.JEFFREYS:
            value = value + self._jeffreys_terms(d, psi, complement)
        return value

    def log_kernel(self, theta):
        return float(self.log_kernel_batch(_theta_array(theta)))

    def log_likelihood(self, theta):
        d = self.pairs.differences(_theta_array(theta))
        psi, complement = self._probabilities(d)
        return float(self._log_likelihood_terms(psi, complement))

    def _pair_slopes(self, d, psi, complement):
        return self.model.density(d) * (self.pairs.wins / psi - self.pairs.losses / complement)

    def log_likelihood_gradient(self, theta):
        """Gradient of the log-likelihood with respect to every worth θ_k."""
        d = self.pairs.differences(_theta_array(theta))
        psi, complement = self._probabilities(d)
        return self.pairs.design.T @ self._pair_slopes(d, psi, complement)

    def jeffreys_log_prior(self, theta):
        if not self.data.is_connected():
            raise EstimationError("comparison graph disconnected: Fisher information is singular")
        d = self.pairs.differences(_theta_array(theta))
        psi, complement = self._probabilities(d)
        value = float(self._jeffreys_terms(d, psi, complement))
        if not np.isfinite(value):
            logger.error("Fisher information is singular")
            raise EstimationError("comparison graph disconnected: Fisher information is singular")
        return value

    def _jeffreys_gradient_reduced(self, d, psi, complement):
        density = self.model.density(d)
        slope = self.model.density_slope(d)
        product = psi * complement
        counts = self.pairs.counts
        reduced = self.pairs.reduced_design
        weights = density * density / product
        # d/dd [f² / (F(1-F))]
        weight_slopes = (2.0 * density * slope * product - density ** 3 * (complement - psi)) / product ** 2

        information = reduced.T @ (reduced * (counts * weights)[:, None])
        leverage = np.einsum("pa,ab,pb->p", reduced, np.linalg.inv(information), reduced)
        return 0.5 * reduced.T @ (counts * weight_slopes * leverage)

    def kernel_gradient_reduced(self, free):
        """Gradient of the log kernel in the free coordinates θ_1 … θ_{n-1}."""
        d = self.pairs.differences(expand_reduced(free))
        psi, complement = self._probabilities(d)
        gradient = self.pairs.reduced_design.T @ self._pair_slopes(d, psi, complement)
        if self.prior is PriorKind.JEFFREYS:
            gradient = gradient + self._jeffreys_gradient_reduced(d, psi, complement)
        return gradient

    def kernel_reduced(self, free):
        return float(self.log_kernel_batch(expand_reduced(free)))

    def reduced_hessian(self, free):
        """Central-difference Hessian of the log kernel built from the analytic gradient."""
        free = np.asarray(free, dtype=float)
        dim = free.size
        hessian = np.empty((dim, dim))
        for k in range(dim):
            step = 1e-5 * (1.0 + abs(free[k]))
            shift = np.zeros(dim)
            shift[k] = step
            hessian[:, k] = (self.kernel_gradient_reduced(free + shift)
                             - self.kernel_gradient_reduced(free - shift)) / (2.0 * step)
        return 0.5 * (hessian + hessian.T)


class PosteriorAnalyzer(PreferenceLikelihood):
    """
    Posterior of the worth parameters for one data set, model and prior.

    The mode, Laplace covariance and grid integrals are computed lazily and cached.
    The quadrature box is centred at the mode with half-widths of ``grid_halfwidth``
    Laplace standard deviations per free coordinate.
    """

    def __init__(self, data, spec: PosteriorSpec, chunk_size=DEFAULT_CHUNK_SIZE):
        logger.info(f"Initializing PosteriorAnalyzer with {spec.model.name}, {spec.prior.value} prior, "
                    f"{spec.grid_points_per_dim} points per dimension")
        if not data.is_connected():
            logger.error("Comparison graph is disconnected; worths are not identifiable")
            raise EstimationError("comparison graph disconnected")
        super().__init__(data, spec.model, spec.prior)
        self.spec = spec
        self.chunk_size = chunk_size
        self._mode = None
        self._covariance = None
        self._integrals = None

    # -- mode -----------------------------------------------------------------------

    def _worth(self, free):
        return WorthVector.centered(self.data.labels, expand_reduced(free))

    def _search_starts(self):
        dim = self.n_objects - 1
        rng = np.random.default_rng(0)
        return [np.zeros(dim)] + [rng.normal(scale=START_SCALE, size=dim) for _ in range(MODE_STARTS - 1)]

    def _objective(self, free):
        value = self.kernel_reduced(free)
        return -value if np.isfinite(value) else np.inf

    def _objective_gradient(self, free):
        return -self.kernel_gradient_reduced(free)

    def _polish(self, free):
        current = self.kernel_reduced(free)
        for iteration in range(POLISH_ITERATIONS):
            gradient = self.kernel_gradient_reduced(free)
            norm = float(np.max(np.abs(gradient)))
            logger.debug(f"Newton polish iteration {iteration}: gradient norm {norm:.3e}")
            hessian = self.reduced_hessian(free)
            if norm <= GRADIENT_TOLERANCE:
                return free, hessian
            try:
                np.linalg.cholesky(-hessian)
            except np.linalg.LinAlgError:
                logger.error(f"Posterior curvature is not negative definite at {expand_reduced(free)}")
                raise EstimationError("posterior curvature is not negative definite at the best iterate",
                                      best_iterate=self._worth(free))
            step = np.linalg.solve(hessian, -gradient)

            for _ in range(30):
                candidate = free + step
                value = self.kernel_reduced(candidate)
                if np.isfinite(value) and value >= current - 1e-9 * (1.0 + abs(current)):
                    break
                step = 0.5 * step
            else:
                break
            free, current = candidate, value

        logger.error(f"Mode search did not reach gradient norm {GRADIENT_TOLERANCE}")
        raise EstimationError("posterior mode search did not converge", best_iterate=self._worth(free))

    def _find_mode(self):
        logger.info(f"Searching for the posterior mode from {MODE_STARTS} starts")
        best = None
        for start in self._search_starts():
            result = minimize(self._objective, start, jac=self._objective_gradient,
                              method="BFGS", options={"gtol": 1e-9, "maxiter": 1000})
            if not np.isfinite(result.fun):
                continue
            if best is None or result.fun < best.fun:
                best = result
        if best is None:
            raise EstimationError("posterior mode search failed from every start")
        if self.prior is PriorKind.UNIFORM and not self.data.is_strongly_connected():
            logger.error("Some objects never lose to the others; the uniform-prior posterior is improper")
            raise EstimationError("posterior is improper: a group of objects never loses to the rest, "
                                  "so no posterior mode exists", best_iterate=self._worth(best.x))

        free, hessian = self._polish(np.asarray(best.x, dtype=float))
        if np.max(np.abs(expand_reduced(free))) > MAX_WORTH:
            logger.error(f"Mode search ran away to |theta| > {MAX_WORTH}")
            raise EstimationError("posterior mode search diverged; the posterior may be improper",
                                  best_iterate=self._worth(free))
        self._mode = free
        self._covariance = np.linalg.inv(-hessian)
        logger.info(f"Posterior mode found at {np.round(expand_reduced(free), 5)}")

    def mode_reduced(self):
        if self._mode is None:
            self._find_mode()
        return self._mode

    def mode(self):
        """Maximiser of the log posterior kernel on the sum-zero hyperplane."""
        return self._worth(self.mode_reduced())

    def laplace_covariance(self):
        """Inverse negative Hessian of the log kernel at the mode, in free coordinates."""
        self.mode_reduced()
        return self._covariance

    def full_standard_deviations(self):
        """Laplace standard deviation of every θ_k, including the eliminated one."""
        matrix = expansion_matrix(self.n_objects)
        return np.sqrt(np.diag(matrix @ self.laplace_covariance() @ matrix.T))

    # -- grid integrals -------------------------------------------------------------

    def _grid(self):
        center = self.mode_reduced()
        halfwidths = self.spec.grid_halfwidth * np.sqrt(np.diag(self.laplace_covariance()))
        return GaussLegendreGrid(center, halfwidths, self.spec.grid_points_per_dim)

    def _integrate(self):
        n = self.n_objects
        grid = self._grid()
        offset = self.kernel_reduced(self.mode_reduced())
        upper = np.triu_indices(n, k=1)
        logger.info(f"Integrating the posterior over {grid.size} nodes")

        total = 0.0
        shell = 0.0
        first_moment = np.zeros(n)
        preference = np.zeros(len(upper[0]))
        for nodes, log_weights, in_shell in grid.chunks(self.chunk_size):
            theta = expand_reduced(nodes)
            weights = np.exp(self.log_kernel_batch(theta) - offset + log_weights)
            total += weights.sum()
            shell += weights[in_shell].sum()
            first_moment += weights @ theta
            psi, _ = self.model.pair(theta[:, upper[0]] - theta[:, upper[1]])
            preference += weights @ psi

        if not (np.isfinite(total) and total > 0):
            raise EstimationError("posterior kernel integrates to zero on the quadrature grid",
                                  best_iterate=self.mode())

        predictive = np.full((n, n), np.nan)
        predictive[upper] = preference / total
        predictive[upper[1], upper[0]] = 1.0 - preference / total
        shell_mass = float(shell / total)
        if shell_mass > TRUNCATION_MASS:
            logger.warning(f"truncation bound too tight: {shell_mass:.2%} of the posterior mass "
                           f"lies in the outermost grid shell")
        if self.clamp_events:
            logger.warning(f"{self.clamp_events} preference probabilities were clamped to "
                           f"[{PROBABILITY_FLOOR}, {PROBABILITY_CEILING}]")

        self._integrals = GridIntegrals(
            mean=tuple(float(v) for v in first_moment / total),
            predictive=tuple(tuple(None if math.isnan(v) else float(v) for v in row) for row in predictive),
            log_normalizer=float(math.log(total) + offset),
            shell_mass=shell_mass,
        )
        logger.info("Posterior integration complete")

    def integrals(self):
        if self._integrals is None:
            self._integrate()
        return self._integrals

    def mean(self):
        """Posterior mean by quadrature, re-centred to sum to zero."""
        return WorthVector.centered(self.data.labels, self.integrals().mean)

    def predictive_matrix(self):
        """Posterior-averaged preference probabilities; None on the diagonal."""
        return self.integrals().predictive

    def log_normalizer(self):
        return self.integrals().log_normalizer

    def truncation_warning(self):
        return self.integrals().shell_mass > TRUNCATION_MASS

    # -- marginals ------------------------------------------------------------------

    def marginal(self, index, curve_points=DEFAULT_CURVE_POINTS):
        """
        Marginal posterior density of θ_index on a uniform grid.

        The remaining worths are integrated out in a reduced system that eliminates some
        other object, so θ_index is a free coordinate there. The change of eliminated
        object has unit Jacobian, so the joint normaliser carries over.
        """
        n = self.n_objects
        if not 0 <= index < n:
            raise ConfigurationError(f"object index {index} out of range for {n} objects")
        eliminated = n - 1 if index != n - 1 else n - 2
        others = [k for k in range(n) if k not in (index, eliminated)]
        free_order = [k for k in range(n) if k != eliminated]
        slot = free_order.index(index)
        other_slots = [free_order.index(k) for k in others]

        mode = expand_reduced(self.mode_reduced())
        deviations = self.full_standard_deviations()
        width = self.spec.grid_halfwidth
        values = np.linspace(mode[index] - width * deviations[index],
                             mode[index] + width * deviations[index], curve_points)
        nuisance = GaussLegendreGrid(mode[others], width * deviations[others], self.spec.grid_points_per_dim)
        offset = self.kernel_reduced(self.mode_reduced())
        log_normalizer = self.log_normalizer()
        logger.info(f"Evaluating the marginal posterior of {self.data.labels[index]}")

        accumulated = np.zeros(curve_points)
        for nodes, log_weights, _ in nuisance.chunks(max(1, self.chunk_size // curve_points)):
            free = np.empty((curve_points, nodes.shape[0], n - 1))
            free[:, :, slot] = values[:, None]
            if other_slots:
                free[:, :, other_slots] = nodes[None, :, :]
            theta = expand_reduced(free, eliminated)
            log_values = self.log_kernel_batch(theta) - offset + log_weights[None, :]
            accumulated += np.exp(log_values).sum(axis=1)

        density = accumulated * math.exp(offset - log_normalizer)
        return MarginalCurve(label=self.data.labels[index],
                             theta=tuple(float(v) for v in values),
                             density=tuple(float(v) for v in density))

    def summarize(self, marginals=False, curve_points=DEFAULT_CURVE_POINTS):
        integrals = self.integrals()
        curves = {}
        if marginals:
            for index, label in enumerate(self.data.labels):
                curves[label] = self.marginal(index, curve_points)
        return PosteriorSummary(
            mean=self.mean(),
            mode=self.mode(),
            log_normalizer=integrals.log_normalizer,
            marginal_grids=curves,
            predictive=integrals.predictive,
            truncation_warning=integrals.shell_mass > TRUNCATION_MASS,
            shell_mass=integrals.shell_mass,
            clamp_events=self.clamp_events,
        )


def log_likelihood(data, model: ModelSpec, theta):
    """
    Log-likelihood of the worths, without the binomial coefficients.

    Args:
        data (PairedComparisonData): Observed counts
        model (ModelSpec): Preference model
        theta (WorthVector or array-like): Worth parameters

    Returns:
        float: Σ_{i<j} r_ij ln ψ_ij + r_ji ln(1 - ψ_ij)
    """
    return PreferenceLikelihood(data, model).log_likelihood(theta)


def log_likelihood_gradient(data, model: ModelSpec, theta):
    return PreferenceLikelihood(data, model).log_likelihood_gradient(theta)


def jeffreys_log_prior(data, model: ModelSpec, theta):
    """Half the log-determinant of the expected Fisher information in the free coordinates."""
    return PreferenceLikelihood(data, model).jeffreys_log_prior(theta)


def log_posterior_kernel(data, spec: PosteriorSpec, theta):
    return PreferenceLikelihood(data, spec.model, spec.prior).log_kernel(theta)


def posterior_mean(data, spec: PosteriorSpec):
    return PosteriorAnalyzer(data, spec).mean()


def posterior_mode(data, spec: PosteriorSpec):
    return PosteriorAnalyzer(data, spec).mode()


def marginal_posterior(data, spec: PosteriorSpec, index, curve_points=DEFAULT_CURVE_POINTS):
    return PosteriorAnalyzer(data, spec).marginal(index, curve_points)

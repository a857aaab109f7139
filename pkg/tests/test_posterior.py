import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from paired_comparison.bayes.posterior import (
    PosteriorAnalyzer,
    PosteriorSpec,
    PreferenceLikelihood,
    PriorKind,
    jeffreys_log_prior,
    log_likelihood,
    log_likelihood_gradient,
    log_posterior_kernel,
    marginal_posterior,
    posterior_mean,
    posterior_mode,
)
from paired_comparison.bayes.quadrature import GaussLegendreGrid, expand_reduced, expansion_matrix, reduce_full
from paired_comparison.data.comparison_data import PairedComparisonData
from paired_comparison.errors import ConfigurationError, EstimationError
from paired_comparison.model.preference_model import (
    ModelKind,
    ModelSpec,
    WorthVector,
    preference_probability,
    t_density,
)

from conftest import (
    JEFFREYS_MEANS,
    JOURNALS,
    NU_GRID,
    RANKING,
    UNIFORM_MEANS,
    UNIFORM_MODES,
    UNREPRODUCIBLE_JEFFREYS_MEANS,
    UNREPRODUCIBLE_UNIFORM_MODES,
)

THREE_OBJECTS = PairedComparisonData(("a", "b", "c"), [[0, 7, 6], [4, 0, 8], [5, 3, 0]])


def _brute_force_posterior(data, spec, points=400, bound=6.0):
    """Trapezoid integration over the raw free coordinates of a three-object posterior."""
    likelihood = PreferenceLikelihood(data, spec.model, spec.prior)
    axis = np.linspace(-bound, bound, points)
    first, second = np.meshgrid(axis, axis, indexing="ij")
    theta = expand_reduced(np.stack([first, second], axis=-1))
    log_kernel = likelihood.log_kernel_batch(theta)
    weights = np.exp(log_kernel - log_kernel.max())
    total = trapezoid(trapezoid(weights, axis, axis=1), axis)
    means = [trapezoid(trapezoid(weights * theta[..., k], axis, axis=1), axis) / total for k in range(3)]
    psi = preference_probability(spec.model, theta[..., 0], theta[..., 1])
    predictive = trapezoid(trapezoid(weights * psi, axis, axis=1), axis) / total
    return np.array(means), predictive


class TestQuadratureGrid:
    def test_expand_and_reduce(self):
        free = np.array([[1.0, 2.0], [0.5, -0.5]])
        np.testing.assert_allclose(expand_reduced(free), [[1.0, 2.0, -3.0], [0.5, -0.5, 0.0]])
        np.testing.assert_allclose(expand_reduced(free, eliminated=0), [[-3.0, 1.0, 2.0], [0.0, 0.5, -0.5]])
        np.testing.assert_allclose(expansion_matrix(3), [[1, 0], [0, 1], [-1, -1]])
        np.testing.assert_allclose(reduce_full(expand_reduced(free, eliminated=1), eliminated=1), free)

    def test_integrates_polynomial_exactly(self):
        grid = GaussLegendreGrid([0.5, -1.0], [2.0, 1.0], 16)
        total = 0.0
        for nodes, log_weights, _ in grid.chunks(chunk_size=37):
            total += np.sum(np.exp(log_weights) * nodes[:, 0] ** 2 * nodes[:, 1] ** 4)
        # ∫_{-1.5}^{2.5} x² dx · ∫_{-2}^{0} y⁴ dy
        expected = (2.5 ** 3 + 1.5 ** 3) / 3.0 * (2.0 ** 5 / 5.0)
        assert total == pytest.approx(expected, rel=1e-12)

    def test_outer_shell(self):
        grid = GaussLegendreGrid([0.0], [1.0], 32)
        (_, _, in_shell), = list(grid.chunks())
        assert in_shell.sum() == 4
        assert in_shell[0] and in_shell[-1] and not in_shell[16]

    def test_rejects_oversized_grid(self):
        with pytest.raises(ConfigurationError):
            GaussLegendreGrid(np.zeros(8), np.ones(8), 48)


class TestLikelihood:
    def test_zero_vector(self, journals):
        expected = sum(journals.comparisons[i, j] for i, j in journals.compared_pairs()) * math.log(0.5)
        assert log_likelihood(journals, ModelSpec.t(3), np.zeros(4)) == pytest.approx(expected, rel=1e-14)

    def test_published_mode_is_stationary(self, journals):
        model = ModelSpec.t(1)
        projector = np.eye(4) - 1.0 / 4.0
        at_mode = projector @ log_likelihood_gradient(journals, model, np.array(UNIFORM_MODES[1]))
        at_zero = projector @ log_likelihood_gradient(journals, model, np.zeros(4))
        assert np.max(np.abs(at_mode)) < 1e-3 * np.max(np.abs(at_zero))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            n = int(rng.integers(2, 6))
            wins = rng.integers(0, 20, size=(n, n))
            np.fill_diagonal(wins, 0)
            wins[0, 1] += 1
            data = PairedComparisonData([f"o{k}" for k in range(n)], wins)
            kind = list(ModelKind)[int(rng.integers(len(ModelKind)))]
            model = ModelSpec.t(float(rng.uniform(0.5, 30))) if kind is ModelKind.TPCM else ModelSpec(kind=kind)
            theta = rng.normal(size=n)

            analytic = log_likelihood_gradient(data, model, theta)
            numerical = np.empty(n)
            h = 1e-5
            for k in range(n):
                shift = np.zeros(n)
                shift[k] = h
                numerical[k] = (log_likelihood(data, model, theta + shift)
                                - log_likelihood(data, model, theta - shift)) / (2 * h)
            scale = max(1.0, float(np.max(np.abs(analytic))))
            np.testing.assert_allclose(analytic, numerical, rtol=1e-6, atol=1e-6 * scale)

    def test_accepts_worth_vector(self, journals):
        worth = WorthVector(labels=JOURNALS, theta=UNIFORM_MEANS[1])
        assert log_likelihood(journals, ModelSpec.t(1), worth) == pytest.approx(
            log_likelihood(journals, ModelSpec.t(1), np.array(UNIFORM_MEANS[1])))

    def test_bradley_terry_two_objects(self):
        data = PairedComparisonData(("x", "y"), [[0, 3], [1, 0]])
        spec = PosteriorSpec(model=ModelSpec(kind=ModelKind.BRADLEY_TERRY))
        mode = posterior_mode(data, spec)
        assert math.exp(mode.theta[0] - mode.theta[1]) == pytest.approx(3.0, rel=1e-7)


class TestJeffreysPrior:
    def test_two_objects_at_origin(self):
        data = PairedComparisonData(("x", "y"), [[0, 2], [3, 0]])
        nu = 3.0
        expected = 0.5 * math.log(5 * (2 * t_density(nu, 0.0)) ** 2 / 0.25)
        assert jeffreys_log_prior(data, ModelSpec.t(nu), np.zeros(2)) == pytest.approx(expected, rel=1e-13)

    def test_matches_expected_information(self, journals):
        model = ModelSpec.t(1)
        theta0 = np.zeros(4)
        pairs = journals.compared_pairs()

        def expected_log_likelihood(free):
            theta = expand_reduced(free)
            total = 0.0
            for i, j in pairs:
                psi0 = preference_probability(model, theta0[i], theta0[j])
                psi = preference_probability(model, theta[i], theta[j])
                total += journals.comparisons[i, j] * (psi0 * math.log(psi) + (1 - psi0) * math.log(1 - psi))
            return total

        h = 1e-3
        hessian = np.empty((3, 3))
        for a in range(3):
            for b in range(3):
                ea, eb = np.eye(3)[a] * h, np.eye(3)[b] * h
                hessian[a, b] = (expected_log_likelihood(ea + eb) - expected_log_likelihood(ea - eb)
                                 - expected_log_likelihood(-ea + eb) + expected_log_likelihood(-ea - eb)) / (4 * h * h)
        expected = 0.5 * np.linalg.slogdet(-hessian)[1]
        assert jeffreys_log_prior(journals, model, theta0) == pytest.approx(expected, rel=1e-4)

    def test_scaling_counts(self, journals):
        model = ModelSpec.t(2)
        theta = np.array(UNIFORM_MEANS[2])
        scaled = PairedComparisonData(journals.labels, journals.wins * 4)
        difference = jeffreys_log_prior(scaled, model, theta) - jeffreys_log_prior(journals, model, theta)
        assert difference == pytest.approx(0.5 * 3 * math.log(4.0), rel=1e-12)

    def test_disconnected_graph(self):
        wins = np.zeros((4, 4), dtype=int)
        wins[0, 1], wins[2, 3] = 3, 5
        data = PairedComparisonData(("a", "b", "c", "d"), wins)
        with pytest.raises(EstimationError, match="disconnected"):
            jeffreys_log_prior(data, ModelSpec.t(1), np.zeros(4))

    def test_kernel_gradient_matches_finite_differences(self, journals):
        likelihood = PreferenceLikelihood(journals, ModelSpec.t(2), PriorKind.JEFFREYS)
        free = np.array([0.7, -2.0, 0.4])
        analytic = likelihood.kernel_gradient_reduced(free)
        h = 1e-5
        numerical = np.array([(likelihood.kernel_reduced(free + h * e) - likelihood.kernel_reduced(free - h * e)) / (2 * h)
                              for e in np.eye(3)])
        np.testing.assert_allclose(analytic, numerical, rtol=1e-6, atol=1e-5)


class TestKernel:
    def test_uniform_kernel_is_likelihood(self, journals):
        spec = PosteriorSpec(model=ModelSpec.t(1))
        theta = np.array(UNIFORM_MODES[1])
        assert log_posterior_kernel(journals, spec, theta) == log_likelihood(journals, spec.model, theta)

    def test_jeffreys_kernel_adds_prior(self, journals):
        spec = PosteriorSpec(prior=PriorKind.JEFFREYS, model=ModelSpec.t(1))
        zero = np.zeros(4)
        expected = log_likelihood(journals, spec.model, zero) + jeffreys_log_prior(journals, spec.model, zero)
        assert log_posterior_kernel(journals, spec, zero) == pytest.approx(expected, rel=1e-14)


class TestPosteriorSpec:
    def test_defaults(self):
        spec = PosteriorSpec(model=ModelSpec.t(2))
        assert (spec.grid_points_per_dim, spec.grid_halfwidth, spec.prior) == (48, 10.0, PriorKind.UNIFORM)

    def test_too_few_points(self):
        with pytest.raises(ConfigurationError):
            PosteriorSpec(model=ModelSpec.t(2), grid_points_per_dim=8)

    @pytest.mark.parametrize("halfwidth", [0.0, -1.0])
    def test_non_positive_halfwidth(self, halfwidth):
        with pytest.raises(ConfigurationError):
            PosteriorSpec(model=ModelSpec.t(2), grid_halfwidth=halfwidth)


class TestSymmetricPair:
    def test_mean_and_mode_at_origin(self, symmetric_pair):
        spec = PosteriorSpec(model=ModelSpec.t(2))
        np.testing.assert_allclose(posterior_mean(symmetric_pair, spec).theta, 0.0, atol=1e-9)
        np.testing.assert_allclose(posterior_mode(symmetric_pair, spec).theta, 0.0, atol=1e-8)

    def test_marginal_is_symmetric(self, symmetric_pair):
        curve = marginal_posterior(symmetric_pair, PosteriorSpec(model=ModelSpec.t(2)), 0)
        density = np.asarray(curve.density)
        assert np.max(np.abs(density - density[::-1])) < 1e-6
        assert curve.integral() == pytest.approx(1.0, abs=1e-3)

    def test_predictive_is_one_half(self, symmetric_pair):
        analyzer = PosteriorAnalyzer(symmetric_pair, PosteriorSpec(model=ModelSpec.t(2)))
        predictive = analyzer.predictive_matrix()
        assert predictive[0][0] is None
        assert predictive[0][1] == pytest.approx(0.5, abs=1e-9)


class TestJournalPosterior:
    @pytest.mark.parametrize("nu", [nu for nu in NU_GRID if nu not in UNREPRODUCIBLE_UNIFORM_MODES])
    def test_uniform_modes(self, journal_analyzer, nu):
        mode = journal_analyzer(nu).mode()
        np.testing.assert_allclose(mode.theta, UNIFORM_MODES[nu], atol=2e-3)

    @pytest.mark.parametrize("nu", UNREPRODUCIBLE_UNIFORM_MODES)
    def test_published_uniform_mode_is_not_a_maximum(self, journals, journal_analyzer, nu):
        analyzer = journal_analyzer(nu)
        published = np.array(UNIFORM_MODES[nu])
        projector = np.eye(4) - 1.0 / 4.0
        gradient = projector @ log_likelihood_gradient(journals, ModelSpec.t(nu), published)
        assert np.max(np.abs(gradient)) > 0.1
        assert np.max(np.abs(analyzer.kernel_gradient_reduced(analyzer.mode_reduced()))) <= 1e-8
        assert analyzer.log_kernel(published) < analyzer.log_kernel(analyzer.mode())
        assert analyzer.mode().theta != pytest.approx(UNIFORM_MODES[nu], abs=2e-3)

    @pytest.mark.parametrize("nu", NU_GRID)
    def test_uniform_means(self, journal_analyzer, nu):
        mean = journal_analyzer(nu).mean()
        tolerance = 5e-3 if nu <= 4 else 1e-2
        np.testing.assert_allclose(mean.theta, UNIFORM_MEANS[nu], atol=tolerance)
        assert math.fsum(mean.theta) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("nu", NU_GRID)
    def test_jeffreys_means(self, journal_analyzer, nu):
        mean = journal_analyzer(nu, PriorKind.JEFFREYS).mean()
        tolerance = 5e-2 if nu in UNREPRODUCIBLE_JEFFREYS_MEANS else 1e-2
        np.testing.assert_allclose(mean.theta, JEFFREYS_MEANS[nu], atol=tolerance)

    @pytest.mark.parametrize("nu", NU_GRID)
    @pytest.mark.parametrize("prior", list(PriorKind))
    @pytest.mark.parametrize("estimator", ["mean", "mode"])
    def test_ranking_everywhere(self, journal_analyzer, nu, prior, estimator):
        estimate = getattr(journal_analyzer(nu, prior), estimator)()
        order = tuple(estimate.labels[k] for k in np.argsort(-estimate.as_array(), kind="stable"))
        assert order == RANKING

    def test_mode_gradient_vanishes(self, journal_analyzer):
        analyzer = journal_analyzer(2, PriorKind.JEFFREYS)
        gradient = analyzer.kernel_gradient_reduced(analyzer.mode_reduced())
        assert np.max(np.abs(gradient)) <= 1e-8

    def test_no_truncation_warning_at_defaults(self, journal_analyzer):
        assert not journal_analyzer(1).truncation_warning()

    def test_marginal_consistent_with_mean(self, journal_analyzer):
        analyzer = journal_analyzer(1)
        curve = analyzer.marginal(3)
        assert curve.label == "JRSS-B"
        assert min(curve.density) >= 0.0
        assert curve.integral() == pytest.approx(1.0, abs=1e-3)
        assert curve.mean() == pytest.approx(analyzer.mean().theta[3], abs=2e-3)

    def test_grid_convergence(self, journals, journal_analyzer):
        coarse = journal_analyzer(1).mean()
        fine = PosteriorAnalyzer(journals, PosteriorSpec(model=ModelSpec.t(1), grid_points_per_dim=96)).mean()
        np.testing.assert_allclose(coarse.theta, fine.theta, atol=1e-3)

    def test_label_permutation(self, journals, journal_analyzer):
        order = [2, 0, 3, 1]
        permuted = PosteriorAnalyzer(journals.permuted(order), PosteriorSpec(model=ModelSpec.t(2))).mode()
        original = journal_analyzer(2).mode()
        np.testing.assert_allclose(permuted.theta, np.array(original.theta)[order], atol=1e-8)

    def test_tight_truncation_is_flagged(self, journals):
        spec = PosteriorSpec(model=ModelSpec.t(3), grid_points_per_dim=16, grid_halfwidth=1.0)
        assert PosteriorAnalyzer(journals, spec).truncation_warning()


class TestThreeObjects:
    @pytest.mark.parametrize("model", [ModelSpec.t(3), ModelSpec(kind=ModelKind.THURSTONE)])
    def test_brute_force_oracle(self, model):
        spec = PosteriorSpec(model=model)
        analyzer = PosteriorAnalyzer(THREE_OBJECTS, spec)
        means, predictive = _brute_force_posterior(THREE_OBJECTS, spec)
        np.testing.assert_allclose(analyzer.mean().theta, means - means.mean(), atol=1e-4)
        assert analyzer.predictive_matrix()[0][1] == pytest.approx(predictive, abs=1e-4)

    def test_brute_force_oracle_jeffreys(self):
        spec = PosteriorSpec(prior=PriorKind.JEFFREYS, model=ModelSpec.t(2))
        means, _ = _brute_force_posterior(THREE_OBJECTS, spec)
        np.testing.assert_allclose(posterior_mean(THREE_OBJECTS, spec).theta, means - means.mean(), atol=1e-4)

    def test_transposed_wins_negate_estimates(self):
        spec = PosteriorSpec(model=ModelSpec.t(2))
        forward = PosteriorAnalyzer(THREE_OBJECTS, spec)
        backward = PosteriorAnalyzer(THREE_OBJECTS.transposed(), spec)
        np.testing.assert_allclose(backward.mode().theta, -np.array(forward.mode().theta), atol=1e-8)
        np.testing.assert_allclose(backward.mean().theta, -np.array(forward.mean().theta), atol=1e-6)

    def test_permuted_means(self):
        spec = PosteriorSpec(model=ModelSpec.t(2))
        order = [2, 0, 1]
        original = posterior_mean(THREE_OBJECTS, spec)
        permuted = posterior_mean(THREE_OBJECTS.permuted(order), spec)
        np.testing.assert_allclose(permuted.theta, np.array(original.theta)[order], atol=1e-6)

    def test_marginal_integrates_to_one(self):
        analyzer = PosteriorAnalyzer(THREE_OBJECTS, PosteriorSpec(model=ModelSpec.t(2)))
        for index in range(3):
            curve = analyzer.marginal(index)
            assert curve.integral() == pytest.approx(1.0, abs=1e-3)
            assert curve.mean() == pytest.approx(analyzer.mean().theta[index], abs=2e-3)

    def test_disconnected_graph(self):
        wins = np.zeros((4, 4), dtype=int)
        wins[0, 1], wins[1, 0], wins[2, 3] = 3, 2, 5
        data = PairedComparisonData(("a", "b", "c", "d"), wins)
        with pytest.raises(EstimationError, match="disconnected"):
            PosteriorAnalyzer(data, PosteriorSpec(model=ModelSpec.t(1)))


class TestImproperPosterior:
    # c never loses, so the uniform-prior likelihood keeps rising as θ_c grows
    NEVER_LOSES = PairedComparisonData(("a", "b", "c"), [[0, 4, 0], [3, 0, 0], [5, 6, 0]])

    @pytest.mark.parametrize("operation", [posterior_mode, posterior_mean])
    def test_uniform_prior_raises(self, operation):
        with pytest.raises(EstimationError, match="improper") as excinfo:
            operation(self.NEVER_LOSES, PosteriorSpec(model=ModelSpec.t(2)))
        best = excinfo.value.best_iterate
        assert best is not None
        assert int(np.argmax(best.theta)) == 2

    def test_summary_raises(self):
        analyzer = PosteriorAnalyzer(self.NEVER_LOSES, PosteriorSpec(model=ModelSpec(kind=ModelKind.BRADLEY_TERRY)))
        with pytest.raises(EstimationError):
            analyzer.summarize()

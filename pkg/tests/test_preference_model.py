import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from paired_comparison.errors import ConfigurationError
from paired_comparison.model.preference_model import (
    ModelKind,
    ModelSpec,
    PreferenceModel,
    WorthVector,
    bradley_terry_probability,
    preference_density,
    preference_probability,
    t_density,
    t_density_slope,
)


class TestModelSpec:
    def test_t_model_requires_nu(self):
        with pytest.raises(ConfigurationError):
            ModelSpec(kind=ModelKind.TPCM)

    @pytest.mark.parametrize("nu", [0.0, -1.0, float("inf")])
    def test_invalid_nu(self, nu):
        with pytest.raises(ConfigurationError):
            ModelSpec.t(nu)

    def test_baseline_ignores_nu(self):
        assert ModelSpec(kind=ModelKind.THURSTONE).name == "thurstone"

    def test_name(self):
        assert ModelSpec.t(2).name == "t(nu=2)"


class TestWorthVector:
    def test_centered(self):
        worth = WorthVector.centered(("a", "b", "c"), [1.0, 2.0, 6.0])
        assert math.fsum(worth.theta) == pytest.approx(0.0, abs=1e-12)
        assert worth.to_dict()["c"] == pytest.approx(3.0)

    def test_rejects_non_zero_sum(self):
        with pytest.raises(ValidationError):
            WorthVector(labels=("a", "b"), theta=(1.0, 1.0))

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValidationError):
            WorthVector(labels=("a", "b", "c"), theta=(1.0, -1.0))


class TestPreferenceProbability:
    def test_published_value(self):
        # Plug-in of the nu=1 uniform posterior means of Biometrika and Comm. in Stats.
        assert preference_probability(ModelSpec.t(1), 1.37908, -3.98254) == pytest.approx(0.94130, abs=1e-5)

    @pytest.mark.parametrize("spec", [ModelSpec.t(1), ModelSpec.t(2.5), ModelSpec.t(30),
                                      ModelSpec(kind=ModelKind.THURSTONE),
                                      ModelSpec(kind=ModelKind.BRADLEY_TERRY),
                                      ModelSpec(kind=ModelKind.CAUCHY)])
    def test_complement_law(self, spec):
        rng = np.random.default_rng(11)
        theta_i = rng.uniform(-8, 8, 10000)
        theta_j = rng.uniform(-8, 8, 10000)
        total = preference_probability(spec, theta_i, theta_j) + preference_probability(spec, theta_j, theta_i)
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_equal_worths(self):
        for spec in (ModelSpec.t(3), ModelSpec(kind=ModelKind.CAUCHY), ModelSpec(kind=ModelKind.BRADLEY_TERRY)):
            assert preference_probability(spec, 0.7, 0.7) == pytest.approx(0.5, abs=1e-15)

    def test_cauchy_equivalence(self):
        d = np.linspace(-50, 50, 2001)
        expected = 0.5 + np.arctan(d) / math.pi
        np.testing.assert_allclose(preference_probability(ModelSpec.t(1), d, 0.0), expected, atol=1e-12)
        np.testing.assert_allclose(preference_probability(ModelSpec(kind=ModelKind.CAUCHY), d, 0.0),
                                   expected, atol=1e-12)

    def test_large_nu_approaches_thurstone(self):
        d = np.linspace(-5, 5, 201)
        np.testing.assert_allclose(preference_probability(ModelSpec.t(1e6), d, 0.0),
                                   preference_probability(ModelSpec(kind=ModelKind.THURSTONE), d, 0.0), atol=1e-4)

    def test_thurstone_quantile(self):
        assert preference_probability(ModelSpec(kind=ModelKind.THURSTONE), 1.644854, 0.0) == pytest.approx(0.95, abs=1e-6)

    def test_matches_scipy_t(self):
        d = np.linspace(-20, 20, 801)
        for nu in (0.5, 1, 2, 3, 4, 15, 30):
            np.testing.assert_allclose(PreferenceModel(ModelSpec.t(nu)).cdf(d), stats.t.cdf(d, nu),
                                       rtol=1e-10, atol=1e-14)

    def test_monotone_in_difference(self):
        d = np.linspace(-30, 30, 3001)
        for spec in (ModelSpec.t(2), ModelSpec(kind=ModelKind.THURSTONE), ModelSpec(kind=ModelKind.BRADLEY_TERRY)):
            assert np.all(np.diff(preference_probability(spec, d, 0.0)) >= 0)

    def test_bradley_terry_scale(self):
        # exp-scale worths 3 and 1 give 3 / (3 + 1)
        spec = ModelSpec(kind=ModelKind.BRADLEY_TERRY)
        assert preference_probability(spec, math.log(3.0), 0.0) == pytest.approx(0.75, abs=1e-15)
        assert bradley_terry_probability(3.0, 1.0) == pytest.approx(0.75)

    def test_bradley_terry_rejects_non_positive(self):
        with pytest.raises(ConfigurationError):
            bradley_terry_probability(0.0, 1.0)

    def test_pair_sums_to_one(self):
        model = PreferenceModel(ModelSpec.t(2))
        psi, complement = model.pair(np.array([-40.0, -1.0, 0.0, 2.0, 40.0]))
        np.testing.assert_allclose(psi + complement, 1.0, atol=1e-15)
        assert complement[-1] == pytest.approx(stats.t.sf(40.0, 2), rel=1e-10)


class TestDensities:
    @pytest.mark.parametrize("spec", [ModelSpec.t(1), ModelSpec.t(4), ModelSpec(kind=ModelKind.THURSTONE),
                                      ModelSpec(kind=ModelKind.BRADLEY_TERRY), ModelSpec(kind=ModelKind.CAUCHY)])
    def test_density_is_derivative_of_probability(self, spec):
        d = np.linspace(-6, 6, 61)
        h = 1e-5
        numerical = (preference_probability(spec, d + h, 0.0) - preference_probability(spec, d - h, 0.0)) / (2 * h)
        np.testing.assert_allclose(preference_density(spec, d), numerical, rtol=1e-6, atol=1e-9)

    @pytest.mark.parametrize("spec", [ModelSpec.t(2), ModelSpec(kind=ModelKind.THURSTONE),
                                      ModelSpec(kind=ModelKind.BRADLEY_TERRY), ModelSpec(kind=ModelKind.CAUCHY)])
    def test_slope_is_derivative_of_density(self, spec):
        model = PreferenceModel(spec)
        d = np.linspace(-6, 6, 61)
        h = 1e-5
        numerical = (model.density(d + h) - model.density(d - h)) / (2 * h)
        np.testing.assert_allclose(model.density_slope(d), numerical, rtol=1e-6, atol=1e-9)

    def test_t_density_matches_scipy(self):
        y = np.linspace(-10, 10, 201)
        np.testing.assert_allclose(t_density(3.0, y), stats.t.pdf(y, 3.0), rtol=1e-12)
        assert t_density_slope(3.0, 0.0) == 0.0

    def test_t_density_rejects_bad_nu(self):
        with pytest.raises(ConfigurationError):
            t_density(0.0, 1.0)

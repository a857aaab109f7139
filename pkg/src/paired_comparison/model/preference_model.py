import logging
import math
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.special import expit

from ..errors import ConfigurationError
from ..special.special_functions import log_beta, normal_cdf, normal_pdf, regularized_beta

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

SUM_ZERO_TOLERANCE = 1e-9


class ModelKind(str, Enum):
    TPCM = "t"
    THURSTONE = "thurstone"
    BRADLEY_TERRY = "bradley-terry"
    CAUCHY = "cauchy"


class ModelSpec(BaseModel):
    """
    Which preference model maps a worth difference to a preference probability.

    ``nu`` is required for the t model and ignored by the baselines.
    """

    model_config = ConfigDict(frozen=True)

    kind: ModelKind = ModelKind.TPCM
    nu: Optional[float] = None

    @model_validator(mode="after")
    def _check_degrees_of_freedom(self):
        if self.kind is ModelKind.TPCM:
            if self.nu is None or not math.isfinite(self.nu) or self.nu <= 0:
                raise ConfigurationError(f"the t model needs a positive degrees of freedom, got nu={self.nu}")
        return self

    @classmethod
    def t(cls, nu):
        return cls(kind=ModelKind.TPCM, nu=nu)

    @property
    def name(self):
        if self.kind is ModelKind.TPCM:
            return f"t(nu={self.nu:g})"
        return self.kind.value


class WorthVector(BaseModel):
    """Worth parameters of n labelled objects under the sum-zero constraint."""

    model_config = ConfigDict(frozen=True)

    labels: Tuple[str, ...]
    theta: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_constraint(self):
        if len(self.labels) < 2:
            raise ValueError("a worth vector needs at least two objects")
        if len(self.labels) != len(self.theta):
            raise ValueError(f"{len(self.labels)} labels but {len(self.theta)} worths")
        if not all(math.isfinite(value) for value in self.theta):
            raise ValueError("worths must be finite")
        total = math.fsum(self.theta)
        if abs(total) > SUM_ZERO_TOLERANCE:
            raise ValueError(f"worths must sum to zero, got {total:.3e}")
        return self

    @classmethod
    def centered(cls, labels: Sequence[str], values) -> "WorthVector":
        """Build a worth vector from arbitrary values by subtracting their mean."""
        values = np.asarray(values, dtype=float)
        centered = values - values.mean()
        return cls(labels=tuple(labels), theta=tuple(float(v) for v in centered))

    def as_array(self):
        return np.array(self.theta, dtype=float)

    def to_dict(self) -> Dict[str, float]:
        return dict(zip(self.labels, self.theta))

    def __len__(self):
        return len(self.theta)


def _t_cdf(nu, d):
    """
    Distribution function of the standardized t at d.

    d <= 0:  1/2 * I_{ν/(ν+d²)}(ν/2, 1/2)
    d >  0:  1/2 * I_{d²/(ν+d²)}(1/2, ν/2) + 1/2
    """
    d = np.asarray(d, dtype=float)
    d2 = d * d
    x = nu / (nu + d2)
    y = d2 / (nu + d2)
    out = np.empty(d.shape)
    lower = d <= 0.0
    if np.any(lower):
        out[lower] = 0.5 * regularized_beta(x[lower], y[lower], 0.5 * nu, 0.5)
    upper = ~lower
    if np.any(upper):
        out[upper] = 0.5 * regularized_beta(y[upper], x[upper], 0.5, 0.5 * nu) + 0.5
    return out


def _check_nu(nu):
    if not (math.isfinite(nu) and nu > 0):
        raise ConfigurationError(f"degrees of freedom must be positive, got {nu}")


def t_density(nu, y):
    """
    Density of the standardized t distribution with nu degrees of freedom.

    Args:
        nu (float): Degrees of freedom, nu > 0
        y (float or array-like): Evaluation point(s)

    Returns:
        float or numpy.ndarray: Density value(s)
    """
    _check_nu(nu)
    values = np.asarray(y, dtype=float)
    log_density = (-0.5 * math.log(nu) - log_beta(0.5 * nu, 0.5)
                   - 0.5 * (nu + 1.0) * np.log1p(values * values / nu))
    density = np.exp(log_density)
    return float(density) if density.ndim == 0 else density


def t_density_slope(nu, y):
    """Derivative of the t density with respect to y."""
    values = np.asarray(y, dtype=float)
    return -(nu + 1.0) * values / (nu + values * values) * t_density(nu, values)


def bradley_terry_probability(pi_i, pi_j):
    """Bradley-Terry preference probability on the positive worth scale."""
    pi_i = np.asarray(pi_i, dtype=float)
    pi_j = np.asarray(pi_j, dtype=float)
    if np.any(pi_i <= 0) or np.any(pi_j <= 0):
        raise ConfigurationError("Bradley-Terry worths must be positive")
    return pi_i / (pi_i + pi_j)


def worth_transform(spec, theta):
    """Map real-scale worths onto the scale the model's formula is written on."""
    theta = np.asarray(theta, dtype=float)
    if spec.kind is ModelKind.BRADLEY_TERRY:
        return np.exp(theta)
    return theta


class PreferenceModel:
    """
    Distribution function H(d) of a paired-comparison model and its first two derivatives.

    All methods are vectorised over worth differences d = θ_i - θ_j.
    """

    def __init__(self, spec: ModelSpec):
        logger.debug(f"Initializing PreferenceModel for {spec.name}")
        self.spec = spec
        self.kind = spec.kind
        self.nu = spec.nu

    def cdf(self, d):
        d = np.asarray(d, dtype=float)
        if self.kind is ModelKind.TPCM:
            return _t_cdf(self.nu, d)
        if self.kind is ModelKind.THURSTONE:
            return normal_cdf(d)
        if self.kind is ModelKind.CAUCHY:
            # 1/2 + arctan(d)/π, written so that the lower tail keeps relative accuracy
            return np.arctan2(1.0, -d) / math.pi
        return expit(d)

    def density(self, d):
        """∂ψ/∂d."""
        d = np.asarray(d, dtype=float)
        if self.kind is ModelKind.TPCM:
            return t_density(self.nu, d)
        if self.kind is ModelKind.THURSTONE:
            return normal_pdf(d)
        if self.kind is ModelKind.CAUCHY:
            return 1.0 / (math.pi * (1.0 + d * d))
        return expit(d) * expit(-d)

    def density_slope(self, d):
        """∂²ψ/∂d²."""
        d = np.asarray(d, dtype=float)
        if self.kind is ModelKind.TPCM:
            return t_density_slope(self.nu, d)
        if self.kind is ModelKind.THURSTONE:
            return -d * normal_pdf(d)
        if self.kind is ModelKind.CAUCHY:
            return -2.0 * d / (math.pi * (1.0 + d * d) ** 2)
        p = expit(d)
        return p * (1.0 - p) * (1.0 - 2.0 * p)

    def pair(self, d):
        """
        Return (ψ(d), ψ(-d)) from a single evaluation of the smaller tail.

        Args:
            d (numpy.ndarray): Worth differences

        Returns:
            tuple: Arrays (psi, psi_complement) summing to one
        """
        d = np.asarray(d, dtype=float)
        tail = np.asarray(self.cdf(-np.abs(d)), dtype=float)
        positive = d > 0.0
        psi = np.where(positive, 1.0 - tail, tail)
        complement = np.where(positive, tail, 1.0 - tail)
        return psi, complement


def preference_probability(spec, theta_i, theta_j):
    """
    Probability that object i is preferred over object j.

    Worths are given on the shared real (sum-zero) scale; Bradley-Terry maps them
    through exp() before applying θ_i / (θ_i + θ_j).

    Args:
        spec (ModelSpec): Preference model
        theta_i (float or array-like): Worth of object i
        theta_j (float or array-like): Worth of object j

    Returns:
        float or numpy.ndarray: ψ_ij in (0, 1)
    """
    theta_i = np.asarray(theta_i, dtype=float)
    theta_j = np.asarray(theta_j, dtype=float)
    if spec.kind is ModelKind.BRADLEY_TERRY:
        shift = np.maximum(theta_i, theta_j)
        result = bradley_terry_probability(worth_transform(spec, theta_i - shift),
                                           worth_transform(spec, theta_j - shift))
    else:
        result = PreferenceModel(spec).cdf(theta_i - theta_j)
    result = np.asarray(result, dtype=float)
    return float(result) if result.ndim == 0 else result


def preference_density(spec, d):
    """Derivative of the preference probability with respect to the worth difference."""
    result = np.asarray(PreferenceModel(spec).density(d), dtype=float)
    return float(result) if result.ndim == 0 else result


# Example usage
if __name__ == "__main__":
    spec = ModelSpec.t(1)
    print(preference_probability(spec, 1.37908, -3.98254))
    print(0.5 + math.atan(1.37908 + 3.98254) / math.pi)

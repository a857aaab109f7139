import logging
import math
import os
from enum import Enum
from typing import List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, field_validator

from ..bayes.posterior import PosteriorSpec, PriorKind
from ..data.comparison_data import CountFormat
from ..errors import ConfigurationError
from ..inference.fit_analysis import Estimator
from ..model.preference_model import ModelKind, ModelSpec

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

DEFAULT_NU = (1.0, 2.0, 3.0, 4.0, 15.0, 30.0)
ENV_PREFIX = "PAIRED_COMPARISON_"


class InputFormat(str, Enum):
    MATRIX = "matrix"
    LONG = "long"

    @property
    def count_format(self):
        return CountFormat.MATRIX if self is InputFormat.MATRIX else CountFormat.LONG


class OutputFormat(str, Enum):
    JSON = "json"
    TABLE = "table"
    CSV = "csv"
    PDF = "pdf"


class RunConfig(BaseModel):
    """Settings of one command-line run."""

    model_config = ConfigDict(frozen=True)

    input_path: Optional[str] = None
    input_format: InputFormat = InputFormat.MATRIX
    model: ModelKind = ModelKind.TPCM
    nu_values: Tuple[float, ...] = DEFAULT_NU
    priors: Tuple[PriorKind, ...] = (PriorKind.UNIFORM, PriorKind.JEFFREYS)
    estimators: Tuple[Estimator, ...] = (Estimator.MEAN, Estimator.MODE)
    grid_points_per_dim: int = 48
    grid_halfwidth: float = 10.0
    output_dir: str = "results"
    formats: Tuple[OutputFormat, ...] = (OutputFormat.JSON, OutputFormat.TABLE)
    jobs: int = 1
    rounded_expected: bool = False
    marginals: bool = False
    fit_threshold: float = 0.15

    @field_validator("nu_values")
    @classmethod
    def _check_nu_values(cls, values):
        if not values:
            raise ConfigurationError("the nu list is empty")
        for value in values:
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"nu values must be positive, got {value}")
        return values

    @field_validator("priors", "estimators", "formats")
    @classmethod
    def _check_non_empty(cls, values):
        if not values:
            raise ConfigurationError("at least one prior, estimator and output format is required")
        return values

    @field_validator("jobs")
    @classmethod
    def _check_jobs(cls, value):
        if value < 1:
            raise ConfigurationError(f"jobs must be at least 1, got {value}")
        return value

    @field_validator("fit_threshold")
    @classmethod
    def _check_threshold(cls, value):
        if not 0.0 <= value <= 1.0:
            raise ConfigurationError(f"fit threshold must lie in [0, 1], got {value}")
        return value

    def posterior_specs(self) -> List[PosteriorSpec]:
        """
        One PosteriorSpec per (nu, prior) run, nu-major.

        Baseline models have no nu, so they get one run per prior.
        """
        if self.model is ModelKind.TPCM:
            models = [ModelSpec.t(nu) for nu in self.nu_values]
        else:
            models = [ModelSpec(kind=self.model)]
        return [PosteriorSpec(prior=prior, model=model, grid_points_per_dim=self.grid_points_per_dim,
                              grid_halfwidth=self.grid_halfwidth)
                for model in models for prior in self.priors]


def parse_nu_list(text):
    """Parse a comma-separated nu list such as ``1,2,3``."""
    values = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            values.append(float(item))
        except ValueError:
            raise ConfigurationError(f"invalid nu value {item!r}") from None
    return tuple(values)


def environment_defaults():
    """
    RunConfig overrides read from the environment (after loading .env).

    Returns:
        dict: Field values for RunConfig
    """
    load_dotenv()
    readers = {
        "GRID_POINTS": ("grid_points_per_dim", int),
        "HALFWIDTH": ("grid_halfwidth", float),
        "OUTPUT_DIR": ("output_dir", str),
        "JOBS": ("jobs", int),
    }
    overrides = {}
    for suffix, (field, convert) in readers.items():
        raw = os.getenv(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        try:
            overrides[field] = convert(raw)
        except ValueError:
            raise ConfigurationError(f"invalid value {raw!r} for {ENV_PREFIX + suffix}") from None
        logger.debug(f"{ENV_PREFIX + suffix} sets {field}={overrides[field]!r}")
    return overrides

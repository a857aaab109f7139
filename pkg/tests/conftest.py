import os
import sys

import pytest

# Add the src directory to the Python path
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from paired_comparison.bayes.posterior import PosteriorAnalyzer, PosteriorSpec, PriorKind  # noqa: E402
from paired_comparison.data.comparison_data import PairedComparisonData, load_bundled_journals  # noqa: E402
from paired_comparison.model.preference_model import ModelSpec  # noqa: E402

JOURNALS = ("Biometrika", "Comm. in Stats.", "JASA", "JRSS-B")

NU_GRID = (1, 2, 3, 4, 15, 30)
RANKING = ("JRSS-B", "Biometrika", "JASA", "Comm. in Stats.")

# Published posterior estimates for the journal data
UNIFORM_MEANS = {
    1: (1.37908, -3.98254, 0.98266, 1.62080),
    2: (0.72445, -2.02793, 0.37334, 0.93014),
    3: (0.60862, -1.68375, 0.27432, 0.80081),
    4: (0.56167, -1.54542, 0.23708, 0.74667),
    15: (0.47751, -1.29895, 0.17721, 0.64423),
    30: (0.46338, -1.25942, 0.16802, 0.62802),
}
UNIFORM_MODES = {
    1: (1.35722, -3.91721, 0.96303, 1.59696),
    2: (0.72057, -2.01634, 0.37032, 0.92545),
    3: (0.61602, -1.72593, 0.31650, 0.79341),
    4: (0.56037, -1.54127, 0.23599, 0.74491),
    15: (0.49328, -1.38834, 0.26660, 0.62846),
    30: (0.47079, -1.30160, 0.21020, 0.62061),
}
JEFFREYS_MEANS = {
    1: (1.36279, -3.93377, 0.96793, 1.60305),
    2: (0.72135, -2.01865, 0.37092, 0.92639),
    3: (0.60683, -1.67871, 0.27311, 0.79878),
    4: (0.57200, -1.54016, 0.22195, 0.74620),
    15: (0.48099, -1.29688, 0.17921, 0.63668),
    30: (0.48840, -1.28792, 0.19643, 0.60309),
}

# Published rows that are not the maximiser or mean of the stated posterior
UNREPRODUCIBLE_UNIFORM_MODES = (3, 15, 30)
UNREPRODUCIBLE_JEFFREYS_MEANS = (4, 30)


@pytest.fixture(scope="session")
def journals():
    return load_bundled_journals()


@pytest.fixture
def symmetric_pair():
    return PairedComparisonData(("A", "B"), [[0, 5], [5, 0]])


@pytest.fixture(scope="session")
def journal_analyzer(journals):
    """Cached PosteriorAnalyzer per (nu, prior) on the journal data."""
    cache = {}

    def build(nu, prior=PriorKind.UNIFORM):
        key = (nu, PriorKind(prior))
        if key not in cache:
            spec = PosteriorSpec(prior=key[1], model=ModelSpec.t(nu))
            cache[key] = PosteriorAnalyzer(journals, spec)
        return cache[key]

    return build

import pytest

from hexmimo.config import InterferenceMode
from hexmimo.moments import build_table


@pytest.fixture(scope="session")
def avg_table():
    """Average-mode moment table at reduced sample count for module tests."""
    return build_table(3.5, InterferenceMode.AVERAGE, n_samples=200_000, seed=1)


@pytest.fixture(scope="session")
def worst_table():
    return build_table(3.5, InterferenceMode.WORST_CASE)


@pytest.fixture(scope="session")
def fullres_tables():
    """Full-resolution tables (1e6 samples/offset) for the acceptance suite."""
    return {
        InterferenceMode.AVERAGE: build_table(
            3.5, InterferenceMode.AVERAGE, n_samples=10 ** 6, seed=2024),
        InterferenceMode.WORST_CASE: build_table(3.5, InterferenceMode.WORST_CASE),
    }

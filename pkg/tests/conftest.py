from pathlib import Path

import numpy as np
import pytest

from core.models import PanelDataset, RateVector, TransitionCountTable


ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = ROOT / "data"
CONFIG_DIR = ROOT / "configs"

# NAFLD cohort: annual, two-year and three-year gaps.
NAFLD_COUNTS = {
    1: [[330, 163, 45, 12], [5, 185, 45, 15], [0, 0, 0, 0], [0, 0, 0, 0]],
    2: [[70, 30, 10, 1], [2, 20, 13, 4], [0, 0, 0, 0], [0, 0, 0, 0]],
    3: [[21, 8, 7, 3], [1, 6, 3, 1], [0, 0, 0, 0], [0, 0, 0, 0]],
}

PUBLISHED_THETA = (0.2908, 0.02285, 0.02805, 0.2076, 0.068)
PUBLISHED_VAR_THETA = [
    [0.061475, -0.04645, -0.01585, 0.0, 0.0],
    [-0.04645, 0.037836, -0.00613, 0.0, 0.0],
    [-0.01585, -0.00613, 0.123658, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0],
]


@pytest.fixture
def theta_hat() -> RateVector:
    return RateVector(*PUBLISHED_THETA)


@pytest.fixture
def theta_initial() -> RateVector:
    """Rounded annual proportions used as the starting vector."""
    return RateVector(0.3, 0.022, 0.02, 0.18, 0.06)


@pytest.fixture
def var_theta() -> np.ndarray:
    return np.array(PUBLISHED_VAR_THETA)


@pytest.fixture
def nafld_tables():
    return {dt: TransitionCountTable(dt, np.array(counts)) for dt, counts in NAFLD_COUNTS.items()}


@pytest.fixture
def nafld_dataset(nafld_tables) -> PanelDataset:
    return PanelDataset(tuple(nafld_tables.values()))


@pytest.fixture
def tables_path() -> Path:
    return DATA_DIR / "nafld_tables.txt"


@pytest.fixture
def model_path() -> Path:
    return DATA_DIR / "nafld_model.json"


@pytest.fixture
def example_config_path() -> Path:
    return CONFIG_DIR / "nafld_example.json"

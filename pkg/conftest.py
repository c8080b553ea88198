# conftest.py
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from app.config import get_settings  # noqa: E402
from app.core.analysis.registry import example_registry  # noqa: E402
from app.schemas.system import EllipticSystem, GridDomain  # noqa: E402

PROBLEMS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "problems")


@pytest.fixture
def settings():
    return get_settings()


@pytest.fixture
def rng():
    return np.random.default_rng(20240117)


@pytest.fixture
def problems_dir():
    return PROBLEMS


@pytest.fixture
def ex18_system() -> EllipticSystem:
    return example_registry("ex1.8").system


@pytest.fixture
def ex110_system() -> EllipticSystem:
    return example_registry("ex1.10").system


@pytest.fixture
def unit_square_30() -> GridDomain:
    return GridDomain.rectangle((0.0, 0.0), (1.0, 1.0), 31)

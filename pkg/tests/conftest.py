from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from secure_twr.channels import Dims, paper_fixture, sample_channels
from secure_twr.schemes import SourceBeamformers

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

small_dims = st.builds(
    Dims, n_a=st.integers(1, 3), n_b=st.integers(1, 3), n_r=st.integers(1, 4)
)
seeds = st.integers(0, 2**32 - 1)


def cn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_sources(rng, dims: Dims, p_a: float = 1.0, p_b: float = 1.0) -> SourceBeamformers:
    q_a = cn(rng, dims.n_a)
    q_b = cn(rng, dims.n_b)
    return SourceBeamformers(
        np.sqrt(p_a) * q_a / np.linalg.norm(q_a), np.sqrt(p_b) * q_b / np.linalg.norm(q_b)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixture_223():
    return paper_fixture(Dims(2, 2, 3))


@pytest.fixture
def random_223():
    return sample_channels(Dims(2, 2, 3), 11)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)

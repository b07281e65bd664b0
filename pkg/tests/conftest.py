# pylint and pytest fixtures dependency injection are not friends
# pylint: disable=redefined-outer-name
import numpy as np
import pytest
from hypothesis import settings

from ellbranch import Ball, Box, SamplerSpec

# Register assert rewrites before importing dependencies
pytest.register_assert_rewrite("tests._utils")

# The first numpy/scipy calls of a worker are slow, deadlines would flake
settings.register_profile("ellbranch", deadline=None, max_examples=50)
settings.load_profile("ellbranch")


@pytest.fixture
def tmp_path(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def sampler():
    return SamplerSpec(count=512, seed=1234, cap=1e3)


@pytest.fixture
def small_sampler():
    return SamplerSpec(count=128, seed=1234, cap=1e2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def unit_disk():
    return Ball(center=(0.0, 0.0), radius=1.0)


@pytest.fixture
def unit_square():
    return Box(lower=(0.0, 0.0), upper=(1.0, 1.0))

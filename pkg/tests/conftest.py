"""Shared fixtures.

The float-mode lamplighter distributions on the scaling grid take minutes
to build (n = 1600 dominates), so they are session scoped and shared by
the invariance-radius and constancy scaling checks.
"""
import pytest

from lampwalk import exact_distribution

SCALING_GRID = (100, 400, 1600)


@pytest.fixture(scope="session")
def float_cd_grid():
    return {n: exact_distribution(2, n=n, mode="float")
            for n in SCALING_GRID}

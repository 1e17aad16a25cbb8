"""
Shared fixtures: catalog metrics by name, a few hand-built metrics and a
seeded generator for the random-start suites.
"""

import numpy as np
import pytest

from pseudogeo.catalog import lookup, metric_from_expressions


@pytest.fixture
def catalog():
    """catalog("torus", rho=3) -> MetricField."""

    def get(name, **params):
        return lookup(name, params).metric

    return get


@pytest.fixture
def flat(catalog):
    return catalog("flat")


@pytest.fixture
def minkowski(catalog):
    return catalog("minkowski")


@pytest.fixture
def klein(catalog):
    return catalog("klein")


@pytest.fixture
def sphere(catalog):
    return catalog("sphere")


@pytest.fixture
def torus(catalog):
    return catalog("torus")


@pytest.fixture
def ex21(catalog):
    return catalog("ex21")


@pytest.fixture
def ex22(catalog):
    return catalog("ex22")


@pytest.fixture
def unsheared():
    """Parabolic along y = 0 with b != 0; shearing by x -> x + y/2 gives dx^2 + y dy^2."""
    return metric_from_expressions("1", "0.5", "y + 0.25", name="unsheared")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

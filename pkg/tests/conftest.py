import numpy as np
import pytest

from qsteer import polytope


@pytest.fixture(scope="session")
def oct6():
    return polytope.load_covering("oct-6")


@pytest.fixture(scope="session")
def oct6_normals(oct6):
    return polytope.enumerate_facet_normals(oct6)


@pytest.fixture(scope="session")
def icosa12():
    return polytope.load_covering("icosa-12")


@pytest.fixture(scope="session")
def icosa12_normals(icosa12):
    return polytope.enumerate_facet_normals(icosa12)


@pytest.fixture(scope="session")
def icosa42():
    return polytope.load_covering("icosa-42")


@pytest.fixture(scope="session")
def icosa42_normals(icosa42):
    return polytope.enumerate_facet_normals(icosa42)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(np.random.PCG64(20260826))

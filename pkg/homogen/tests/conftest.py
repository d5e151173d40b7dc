import json
import os

import pytest

from homogen.models.cell import TorusGrid
from homogen.models.coefficient import CoefficientSpec, CoefficientTerm, TrigFactor
from homogen.models.kernel import KernelSpec
from homogen.models.run import RunConfig

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "..", "configs")


def load_shipped(name: str) -> RunConfig:
    with open(os.path.join(CONFIG_DIR, name), "r", encoding="utf-8") as fh:
        return RunConfig.model_validate(json.load(fh))


def term(coefficient, xi=None, eta=None, s=None) -> CoefficientTerm:
    factors = {}
    for name, spec in (("xi", xi), ("eta", eta), ("s", s)):
        if spec is not None:
            factors[name] = TrigFactor(kind=spec[0], harmonic=spec[1])
    return CoefficientTerm(coefficient=coefficient, **factors)


@pytest.fixture
def uniform01():
    return KernelSpec(family="uniform", center=0.0, half_width=1.0)


@pytest.fixture
def uniform11():
    return KernelSpec(family="uniform", center=1.0, half_width=1.0)


@pytest.fixture
def triangular01():
    return KernelSpec(family="triangular", center=0.0, half_width=1.0)


@pytest.fixture
def mu_one():
    return CoefficientSpec()


@pytest.fixture
def mu_arrival():
    """1 + 0.5 cos(2 pi eta)"""
    return CoefficientSpec(terms=[term(0.5, eta=("cos", 1))])


@pytest.fixture
def mu_departure():
    """1 + 0.6 cos(2 pi xi)"""
    return CoefficientSpec(terms=[term(0.6, xi=("cos", 1))])


@pytest.fixture
def mu_time_only():
    """1 + 0.5 sin(2 pi s)"""
    return CoefficientSpec(terms=[term(0.5, s=("sin", 1))])


@pytest.fixture
def mu_arrival_oscillating():
    """1 + 0.5 cos(2 pi eta) cos(2 pi s)"""
    return CoefficientSpec(terms=[term(0.5, eta=("cos", 1), s=("cos", 1))])


@pytest.fixture
def grid64():
    return TorusGrid(dimension=1, n=64)


@pytest.fixture
def grid32():
    return TorusGrid(dimension=1, n=32)

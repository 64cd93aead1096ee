from __future__ import annotations

import numpy as np
import pytest

from pdmp_ldp.calcium.model import calcium_model
from pdmp_ldp.calcium.params import CalciumParams
from pdmp_ldp.model.network import PDMPModel, ReactionNetwork
from pdmp_ldp.model.registry import mass_action_model


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def poisson_params(rate: float = 1.0, scale: int = 100) -> dict:
    return {
        "x0": [0.0],
        "u0": [],
        "scale": scale,
        "rate_bound": rate,
        "reactions": [{"xi": [1], "rate": rate, "x_order": [0], "u_order": []}],
    }


def poisson_model(rate: float = 1.0, scale: int = 100) -> PDMPModel:
    """One species, one reaction firing at constant per-capita rate `rate`."""
    return mass_action_model(poisson_params(rate, scale))


def decay_model(rate: float = 0.0, scale: int = 10) -> PDMPModel:
    """Constant-rate reaction with a slow variable relaxing as du/dt = -u."""
    return mass_action_model(
        {
            "x0": [0.0],
            "u0": [1.0],
            "scale": scale,
            "rate_bound": max(rate, 0.0),
            "reactions": [{"xi": [1], "rate": rate, "x_order": [0], "u_order": [0]}],
            "drift": {"constant": [0.0], "u": [[-1.0]], "x": [[0.0]]},
        }
    )


def constant_network(rates, xi, rate_bound=None) -> ReactionNetwork:
    rates = list(rates)
    return ReactionNetwork(
        xi=np.asarray(xi),
        intensities=tuple((lambda x, u, r=r: r) for r in rates),
        rate_bound=max(rates) if rate_bound is None else rate_bound,
    )


@pytest.fixture
def calcium_params() -> CalciumParams:
    return CalciumParams()


@pytest.fixture
def calcium(calcium_params) -> PDMPModel:
    return calcium_model(calcium_params)


@pytest.fixture
def calcium_reduced(calcium_params) -> PDMPModel:
    return calcium_model(calcium_params, reduced=True)


@pytest.fixture
def poisson() -> PDMPModel:
    return poisson_model()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)

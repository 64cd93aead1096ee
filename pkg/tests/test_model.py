import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import constant_network, poisson_params
from pdmp_ldp.calcium.model import calcium_network
from pdmp_ldp.calcium.params import CalciumParams
from pdmp_ldp.errors import ConfigError, InvariantViolationError, ModelEvaluationError, NetworkStructureError
from pdmp_ldp.model.network import PDMPModel, ReactionNetwork, intensity
from pdmp_ldp.model.registry import build_model, mass_action_model
from pdmp_ldp.model.state import HybridState, apply_reaction, on_lattice, snap_to_lattice
from pdmp_ldp.model.validation import SamplingBox, validate_network


def test_network_rejects_empty_and_mismatched_structure():
    with pytest.raises(NetworkStructureError):
        ReactionNetwork(xi=np.zeros((0, 1)), intensities=(), rate_bound=1.0)
    with pytest.raises(NetworkStructureError):
        ReactionNetwork(xi=np.array([[1], [-1]]), intensities=(lambda x, u: 1.0,), rate_bound=1.0)
    with pytest.raises(NetworkStructureError):
        ReactionNetwork(xi=np.array([[0]]), intensities=(lambda x, u: 1.0,), rate_bound=1.0)
    with pytest.raises(NetworkStructureError):
        ReactionNetwork(xi=np.array([[0.5]]), intensities=(lambda x, u: 1.0,), rate_bound=1.0)


def test_model_rejects_wrong_initial_dimensions():
    net = constant_network([1.0], [[1]])
    with pytest.raises(NetworkStructureError):
        PDMPModel(network=net, drift=lambda u, x: np.zeros(0), m=0, u0=[], x0=[0.0, 1.0], scale=10)
    with pytest.raises(NetworkStructureError):
        PDMPModel(network=net, drift=lambda u, x: np.zeros(0), m=1, u0=[], x0=[0.0], scale=10)
    with pytest.raises(NetworkStructureError):
        PDMPModel(network=net, drift=lambda u, x: np.zeros(0), m=0, u0=[], x0=[0.0], scale=0)


@pytest.mark.parametrize(
    "params, alpha, x, u, expected",
    [
        ({"alpha_close": 2.0}, 0, 0.5, 0.3, 1.0),
        ({}, 1, 1.0, 0.7, 0.0),
        ({"alpha_open": 5.0}, 1, 0.25, 0.8, 3.0),
    ],
)
def test_calcium_intensities(params, alpha, x, u, expected):
    net = calcium_network(CalciumParams(**params))
    assert intensity(net, np.array([x]), np.array([u, 1.0]), alpha) == pytest.approx(expected)


def test_intensity_rejects_non_finite_and_negative_values():
    net = ReactionNetwork(
        xi=np.array([[1], [1]]),
        intensities=(lambda x, u: np.nan, lambda x, u: -1.0),
        rate_bound=1.0,
    )
    with pytest.raises(ModelEvaluationError) as nan_err:
        intensity(net, np.zeros(1), np.zeros(0), 0)
    assert nan_err.value.reaction == 0
    with pytest.raises(ModelEvaluationError):
        intensity(net, np.zeros(1), np.zeros(0), 1)


def test_apply_reaction_moves_on_the_lattice():
    net = calcium_network(CalciumParams())
    state = HybridState.initial(np.array([0.5]), np.array([0.1, 9.5]), net.M)
    opened = apply_reaction(state, net, 1, 10)
    assert opened.x[0] == pytest.approx(0.6)
    assert opened.z[1] == pytest.approx(0.1)

    back = apply_reaction(apply_reaction(state, net, 0, 10), net, 1, 10)
    assert back.x[0] == state.x[0]
    assert_allclose(back.z, [0.1, 0.1])
    assert back.constraint_defect(state.x, net) <= 1e-12


def test_apply_reaction_two_species():
    net = constant_network([1.0], [[1, -1]])
    state = HybridState.initial(np.array([0.0, 0.25]), np.zeros(0), 1)
    out = apply_reaction(state, net, 0, 4)
    assert_allclose(out.x, [0.25, 0.0])


def test_apply_reaction_rejects_negative_concentration():
    net = constant_network([1.0], [[-1]])
    state = HybridState.initial(np.array([0.0]), np.zeros(0), 1)
    with pytest.raises(InvariantViolationError) as err:
        apply_reaction(state, net, 0, 10)
    assert err.value.reaction == 0


def test_snap_to_lattice():
    snapped = snap_to_lattice(np.array([0.1234]), 100)
    assert_allclose(snapped, [0.12])
    assert on_lattice(snapped, 100)
    assert not on_lattice(np.array([0.1234]), 100)


def test_validate_calcium_network_passes(calcium_params):
    box = SamplingBox(x_low=[0.0], x_high=[1.0], u_low=[0.0, 0.0], u_high=[calcium_params.c_total / calcium_params.gamma, 10.0])
    report = validate_network(calcium_network(calcium_params), box, 500, seed=3)
    assert report.passed
    assert report.to_dict()["passed"] is True
    assert max(report.max_rates) <= calcium_params.rate_bound


def test_validate_flags_negative_rate():
    net = ReactionNetwork(xi=np.array([[1]]), intensities=(lambda x, u: -1.0,), rate_bound=1.0)
    report = validate_network(net, SamplingBox(x_low=[0.0], x_high=[1.0]), 10)
    assert not report.passed
    assert report.negative_rate[0]["reaction"] == 0


def test_validate_flags_positivity_guard():
    net = ReactionNetwork(xi=np.array([[-1]]), intensities=(lambda x, u: 1.0,), rate_bound=1.0)
    report = validate_network(net, SamplingBox(x_low=[0.0], x_high=[1.0]), 10)
    assert not report.passed
    assert report.guard_violations
    assert report.guard_violations[0]["x"] == [0.0]


def test_validate_flags_rate_bound():
    net = ReactionNetwork(xi=np.array([[1]]), intensities=(lambda x, u: 2.0,), rate_bound=1.0)
    report = validate_network(net, SamplingBox(x_low=[0.0], x_high=[1.0]), 5)
    assert report.bound_violations
    assert report.max_rates == [2.0]


def test_validate_rejects_mismatched_box():
    net = constant_network([1.0], [[1]])
    with pytest.raises(NetworkStructureError):
        validate_network(net, SamplingBox(x_low=[0.0, 0.0], x_high=[1.0, 1.0]), 5)
    with pytest.raises(NetworkStructureError):
        validate_network(net, SamplingBox(x_low=[0.0], x_high=[1.0]), 0)


def test_mass_action_model_from_params():
    model = mass_action_model(
        {
            "x0": [0.5],
            "u0": [2.0],
            "scale": 50,
            "rate_bound": 10.0,
            "reactions": [
                {"xi": [1], "rate": 3.0, "x_order": [0], "u_order": [1]},
                {"xi": [-1], "rate": 2.0, "x_order": [1], "u_order": [0]},
            ],
            "drift": {"constant": [1.0], "u": [[-0.5]], "x": [[2.0]]},
        }
    )
    assert_allclose(model.network.rates(np.array([0.5]), np.array([2.0])), [6.0, 1.0])
    assert_allclose(model.drift_at(np.array([2.0]), np.array([0.5])), [1.0])
    gx, gu = model.network.rate_gradients(np.array([0.5]), np.array([2.0]))
    assert_allclose(gx, [[0.0], [2.0]])
    assert_allclose(gu, [[3.0], [0.0]])
    assert_allclose(model.mean_drift(np.array([0.5]), np.array([2.0])), [5.0])


def test_mass_action_model_lists_bad_keys():
    with pytest.raises(ConfigError) as err:
        mass_action_model({"x0": [], "reactions": []})
    assert "model.params.reactions" in err.value.keys
    assert "model.params.x0" in err.value.keys


def test_build_model_by_name():
    assert build_model("custom", poisson_params(scale=7)).scale == 7
    assert build_model("calcium", {"N": 40, "reduced": True}).m == 1
    with pytest.raises(ConfigError):
        build_model("unknown", {})


def test_drift_partials_fall_back_to_finite_differences():
    net = constant_network([1.0], [[1]])
    model = PDMPModel(
        network=net,
        drift=lambda u, x: np.array([u[0] * u[0] + 3.0 * x[0]]),
        m=1,
        u0=[1.0],
        x0=[0.5],
        scale=10,
    )
    au, ax = model.drift_partials(np.array([2.0]), np.array([0.5]))
    assert_allclose(au, [[4.0]], rtol=1e-6)
    assert_allclose(ax, [[3.0]], rtol=1e-6)


def test_with_initial_keeps_network(calcium):
    moved = calcium.with_initial(x0=[0.3], scale=20)
    assert moved.network is calcium.network
    assert moved.scale == 20
    assert_allclose(moved.x0, [0.3])
    assert_allclose(moved.u0, calcium.u0)

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import constant_network
from pdmp_ldp.calcium.experiment import (
    MonteCarloPlan,
    conserved_drift,
    relative_slope_error,
    wave_transition_experiment,
)
from pdmp_ldp.calcium.lagrangian import (
    calcium_contracted_lagrangian,
    calcium_lagrangian_derivatives,
    z1dot_quadratic,
    zdot_sensitivities,
)
from pdmp_ldp.calcium.model import calcium_model, calcium_model_from_dict, reduce_u2
from pdmp_ldp.calcium.params import CalciumParams
from pdmp_ldp.errors import ConfigError, SingularityError
from pdmp_ldp.ldp.contracted import contracted_derivatives, contracted_lagrangian
from pdmp_ldp.ldp.rate import INFINITE_ACTION, ell
from pdmp_ldp.numerics.differentiation import jacobian
from pdmp_ldp.optimal_path.shooting import ShootingSettings
from pdmp_ldp.simulate.fluid import fixed_point

QUICK = ShootingSettings(xdot_scales=(1.0,), eta_offsets=(0.0,), output_intervals=128)


def test_quadratic_root_examples():
    assert z1dot_quadratic(0.0, 1.0, 4.0) == pytest.approx(2.0)
    assert z1dot_quadratic(3.0, 1.0, 4.0) == pytest.approx(1.0)
    value, zdot = calcium_contracted_lagrangian(3.0, 1.0, 4.0)
    assert_allclose(zdot, [1.0, 4.0])
    assert value == pytest.approx(0.0, abs=1e-12)
    assert zdot_sensitivities(0.0, 1.0, 4.0)["dz1_dxdot"] == pytest.approx(-0.5)


def test_quadratic_root_is_stable_for_large_velocities():
    z1 = z1dot_quadratic(1e8, 1e-3, 1e-3)
    assert z1 == pytest.approx(1e-14, rel=1e-8)
    assert z1dot_quadratic(-1e8, 1e-3, 1e-3) == pytest.approx(1e8, rel=1e-12)


def test_closed_form_matches_dual_newton(rng):
    for _ in range(1000):
        lam1, lam2 = rng.uniform(0.1, 10.0, size=2)
        v = rng.uniform(-5.0, 5.0)
        closed, zdot = calcium_contracted_lagrangian(v, lam1, lam2)
        inner = contracted_lagrangian(np.array([v]), np.zeros(1), np.zeros(0), constant_network([lam1, lam2], [[-1], [1]]))
        assert closed == pytest.approx(inner.value, rel=1e-10, abs=1e-10)
        assert_allclose(zdot, inner.zdot, rtol=1e-10, atol=1e-10)


def test_dead_reaction_cannot_carry_flux():
    value, zdot = calcium_contracted_lagrangian(0.5, 1.0, 0.0)
    assert value is INFINITE_ACTION
    value, zdot = calcium_contracted_lagrangian(-0.5, 1.0, 0.0)
    assert value == pytest.approx(ell(0.5))
    assert_allclose(zdot, [0.5, 0.0])


def test_analytic_derivatives_match_generic(calcium, rng):
    for _ in range(25):
        x = np.array([rng.uniform(0.05, 0.95)])
        u1 = rng.uniform(0.05, 1.5)
        u = np.array([u1, reduce_u2(CalciumParams(), u1)])
        v = np.array([rng.uniform(-0.5, 0.5)])
        exact = contracted_derivatives(v, x, u, calcium)
        generic = contracted_derivatives(v, x, u, calcium, analytic=False)
        assert exact.value == pytest.approx(generic.value, abs=1e-10)
        for name in ("dxdot", "dx", "du", "hess_xdot", "cross_x", "cross_u", "dzdot_dxdot"):
            assert_allclose(getattr(exact, name), getattr(generic, name), rtol=1e-6, atol=1e-9, err_msg=name)


def _well_conditioned_states(rng, count, params):
    # Rates at least 0.2 and optimal fluxes at least 0.1.
    states = []
    while len(states) < count:
        x = rng.uniform(0.05, 0.95)
        u1 = rng.uniform(0.05, 1.5)
        v = rng.uniform(-0.5, 0.5)
        rates = (params.alpha_close * x, params.alpha_open * u1 * (1.0 - x))
        _, zdot = calcium_contracted_lagrangian(v, *rates)
        if min(rates) >= 0.2 and zdot.min() >= 0.1:
            states.append((np.array([v]), np.array([x]), np.array([u1, reduce_u2(params, u1)])))
    return states


def test_analytic_derivatives_match_central_differences(calcium_params, rng):
    h = 1e-5

    def at(v, x, u):
        return calcium_lagrangian_derivatives(v, x, u, calcium_params)

    def close(analytic, numeric, name):
        assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-7, err_msg=name)

    step = np.array([h])
    for v, x, u in _well_conditioned_states(rng, 1000, calcium_params):
        der = at(v, x, u)
        ahead, behind = at(v + step, x, u), at(v - step, x, u)
        close(der.dxdot, (ahead.value - behind.value) / (2 * h), "dxdot")
        close(der.hess_xdot[0, 0], (ahead.dxdot - behind.dxdot) / (2 * h), "hess_xdot")
        close(der.dzdot_dxdot[:, 0], (ahead.zdot - behind.zdot) / (2 * h), "dzdot_dxdot")
        close(der.d2zdot_dxdot2[0, 0, 0], (ahead.dzdot_dxdot[0, 0] - behind.dzdot_dxdot[0, 0]) / (2 * h), "d2z1_dxdot2")
        east, west = at(v, x + step, u), at(v, x - step, u)
        close(der.dx, (east.value - west.value) / (2 * h), "dx")
        close(der.cross_x[0, 0], (east.dxdot - west.dxdot) / (2 * h), "cross_x")
        du = np.array([h, 0.0])
        up, down = at(v, x, u + du), at(v, x, u - du)
        close(der.du[0], (up.value - down.value) / (2 * h), "du")
        close(der.cross_u[0, 0], (up.dxdot - down.dxdot) / (2 * h), "cross_u")


def test_lagrangian_is_convex_in_velocity(calcium_params):
    x, u = np.array([0.3]), np.array([0.4, 8.0])
    velocities = np.linspace(-0.25, 0.6, 41)
    values = np.array([calcium_lagrangian_derivatives(v, x, u, calcium_params).value for v in velocities])
    assert np.all(np.diff(values, 2) > 0.0)
    assert all(calcium_lagrangian_derivatives(v, x, u, calcium_params).hess_xdot[0, 0] > 0 for v in velocities)


@pytest.mark.parametrize("x, reaction", [(0.0, 0), (1.0, 1)])
def test_derivatives_refuse_the_boundary(calcium_params, x, reaction):
    with pytest.raises(SingularityError) as err:
        calcium_lagrangian_derivatives(np.array([0.1]), np.array([x]), np.array([0.5, 7.5]), calcium_params)
    assert err.value.details["reaction"] == reaction


def test_reduce_u2(caplog):
    params = CalciumParams(gamma=1.0, c_total=5.0)
    assert reduce_u2(params, 2.0) == pytest.approx(3.0)
    with caplog.at_level(logging.WARNING, logger="pdmp_ldp.calcium.model"):
        assert reduce_u2(params, 6.0) == pytest.approx(-1.0)
    assert "negative" in caplog.text


def test_params_validation():
    assert CalciumParams().rate_bound == pytest.approx(4.0)
    with pytest.raises(ConfigError) as err:
        CalciumParams(gamma=0.0, x_target=1.5).validate()
    assert set(err.value.keys) == {"model.params.gamma", "model.params.x_target"}
    with pytest.raises(ConfigError) as err:
        CalciumParams.from_dict({"gama": 5})
    assert err.value.keys == ["model.params.gama"]
    with pytest.raises(ConfigError):
        CalciumParams.from_dict({"N": "many"})
    assert CalciumParams.from_dict({"N": "200"}).N == 200


def test_reduced_model_follows_the_full_drift(calcium, calcium_reduced, calcium_params):
    for x, u1 in [(0.2, 0.1), (0.7, 0.9), (0.5, 1.8)]:
        u2 = reduce_u2(calcium_params, u1)
        full = calcium.drift_at(np.array([u1, u2]), np.array([x]))
        reduced = calcium_reduced.drift_at(np.array([u1]), np.array([x]))
        assert reduced[0] == pytest.approx(full[0])
        assert full[1] == pytest.approx(-calcium_params.gamma * full[0])


def test_drift_jacobian_matches_finite_differences(calcium):
    x, u = np.array([0.35]), np.array([0.6, 7.0])
    au, ax = calcium.drift_partials(u, x)
    assert_allclose(au, jacobian(lambda uu: calcium.drift_at(uu, x), u), rtol=1e-6, atol=1e-9)
    assert_allclose(ax, jacobian(lambda xx: calcium.drift_at(u, xx), x), rtol=1e-6, atol=1e-9)


def test_model_from_dict():
    model = calcium_model_from_dict({"N": 250, "reduced": True, "alpha_open": 3.0})
    assert model.name == "calcium_reduced"
    assert model.scale == 250
    assert model.metadata["params"]["alpha_open"] == 3.0
    assert calcium_model().metadata["reduced"] is False


def test_wave_to_the_fixed_point_costs_nothing(calcium_params):
    x_star = float(fixed_point(calcium_model(calcium_params)).x[0])
    report = wave_transition_experiment(calcium_params, x_target=x_star, settings=QUICK)
    assert report.J_star <= 1e-8
    assert conserved_drift(report) <= 1e-8
    assert relative_slope_error(report) is None
    payload = report.to_dict()
    assert payload["fixed_point"]["x"] == pytest.approx([x_star])
    assert payload["monte_carlo"] == []


def test_wave_target_below_fixed_point_is_a_config_error(calcium_params):
    with pytest.raises(ConfigError) as err:
        wave_transition_experiment(calcium_params, x_target=0.5)
    assert err.value.keys == ["model.params.x_target"]


@pytest.mark.slow
def test_default_wave_experiment_runs_end_to_end(calcium_params):
    report = wave_transition_experiment(calcium_params)
    assert report.x_target == pytest.approx(0.9)
    assert 0.02 <= report.J_star <= 0.1
    assert report.trajectory.x[-1, 0] == pytest.approx(0.9, abs=1e-8)
    assert np.max(np.abs(report.trajectory.eta_terminal)) <= 1e-8
    assert conserved_drift(report) <= 1e-6
    assert report.to_dict()["J_star"] == pytest.approx(report.J_star)


@pytest.mark.slow
@pytest.mark.parametrize("x_target", [0.76, 0.8, 0.85, 0.9])
def test_wave_experiment_converges_across_targets(calcium_params, x_target):
    report = wave_transition_experiment(calcium_params, x_target=x_target)
    assert report.J_star > 0.0
    assert report.trajectory.x[-1, 0] == pytest.approx(x_target, abs=1e-8)


@pytest.mark.slow
def test_wave_ramp_is_monotone(calcium_params):
    ramp = (0.8, 0.825, 0.85, 0.875, 0.9)
    report = wave_transition_experiment(calcium_params, x_target=0.9, ramp=ramp)
    levels = [row["J_star"] for row in report.ramp]
    assert len(levels) == 5
    assert all(a < b for a, b in zip(levels, levels[1:]))
    assert levels[-1] == pytest.approx(report.J_star, rel=1e-6)


@pytest.mark.slow
def test_monte_carlo_slope_tracks_the_exponent(calcium_params):
    plan = MonteCarloPlan(scales=(20, 40, 80), trials=1_000_000, master_seed=3, workers=8, executor="process")
    report = wave_transition_experiment(calcium_params, monte_carlo=plan)
    assert 0.02 <= report.J_star <= 0.1
    assert [row["N"] for row in report.monte_carlo] == [20, 40, 80]
    assert all(row["hits"] > 0 for row in report.monte_carlo)
    assert relative_slope_error(report) <= 0.25

import json
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import poisson

from conftest import poisson_model
from pdmp_ldp.errors import BVPError, ShootingError
from pdmp_ldp.export.artifacts import safe_json_dumps
from pdmp_ldp.ldp.action import action
from pdmp_ldp.ldp.contracted import contracted_derivatives
from pdmp_ldp.ldp.rate import ell, flux_lagrangian
from pdmp_ldp.numerics.differentiation import gradient, jacobian
from pdmp_ldp.optimal_path.collocation import collocation_minimize
from pdmp_ldp.optimal_path.euler_lagrange import (
    ELState,
    assemble_contracted_el_rhs,
    assemble_flux_el_rhs,
    el_residual,
)
from pdmp_ldp.optimal_path.hitting import hitting_exponent
from pdmp_ldp.optimal_path.shooting import (
    OptimalTrajectory,
    SegmentedResidual,
    ShootingProblem,
    ShootingSettings,
    collocation_nodes,
    shoot,
    solve_bvp,
    start_grid,
)
from pdmp_ldp.simulate.fluid import deterministic_limit, fixed_point

QUICK = ShootingSettings(xdot_scales=(1.0,), eta_offsets=(0.0,), output_intervals=128)
ELL_2 = 2.0 * np.log(2.0) - 1.0


def test_poisson_hitting_exponent():
    estimate = hitting_exponent(poisson_model(), [2.0], 1.0)
    assert estimate.action == pytest.approx(ELL_2, abs=1e-6)
    assert estimate.exponent == pytest.approx(100 * estimate.action)
    assert_allclose(estimate.trajectory.xdot[:, 0], 2.0, rtol=1e-6)
    assert estimate.to_dict()["N"] == 100


def test_poisson_hitting_exponent_in_flux_form():
    estimate = hitting_exponent(poisson_model(), z_target=[2.0], T=1.0)
    assert estimate.trajectory.form == "flux"
    assert estimate.action == pytest.approx(ELL_2, abs=1e-6)


@pytest.mark.parametrize("scale", [50, 100, 200, 400])
def test_exact_poisson_tail_approaches_the_exponent(scale):
    minus_log_p = -poisson.logsf(2 * scale - 1, scale) / scale
    assert abs(minus_log_p - ell(2.0)) <= 2.0 * np.log(scale) / scale + 0.01


def test_deterministic_endpoint_costs_nothing(calcium):
    T = 1.0
    target = deterministic_limit(calcium, T).x[-1]
    estimate = hitting_exponent(calcium, target, T, settings=QUICK)
    assert estimate.action <= 1e-8
    assert_allclose(estimate.trajectory.eta, 0.0, atol=1e-6)
    assert el_residual(estimate.trajectory, calcium) <= 1e-4


def test_drift_guess_hits_the_fluid_endpoint(calcium):
    T = 1.0
    target = deterministic_limit(calcium, T).x[-1]
    problem = ShootingProblem(model=calcium, T=T, x_target=target)
    guess = np.concatenate([calcium.mean_drift(calcium.x0, calcium.u0), np.zeros(calcium.m)])
    assert np.max(np.abs(shoot(problem, guess))) <= 1e-6


def test_shoot_rejects_bad_guesses(poisson):
    problem = ShootingProblem(model=poisson, T=1.0, x_target=[2.0])
    with pytest.raises(ShootingError):
        shoot(problem, np.array([np.nan]))
    with pytest.raises(ShootingError):
        shoot(problem, np.array([1.0, 0.0]))


def test_problem_validation(poisson):
    with pytest.raises(ValueError):
        ShootingProblem(model=poisson, T=0.0, x_target=[1.0])
    with pytest.raises(ValueError):
        ShootingProblem(model=poisson, T=1.0)
    with pytest.raises(ValueError):
        ShootingProblem(model=poisson, T=1.0, x_target=[1.0, 2.0])


def test_unreachable_target_raises_bvp_error(poisson):
    # Only an increasing reaction exists, so x cannot fall.
    problem = ShootingProblem(model=poisson, T=1.0, x_target=[-1.0], settings=ShootingSettings(max_iter=3))
    with pytest.raises(BVPError) as err:
        solve_bvp(problem)
    assert len(err.value.starts) == 3
    assert not any(s["converged"] for s in err.value.starts)


def test_start_grid_sizes(poisson, calcium):
    assert len(start_grid(ShootingProblem(model=poisson, T=1.0, x_target=[2.0]))) == 3
    starts = start_grid(ShootingProblem(model=calcium, T=1.0, x_target=[0.5]))
    # Three uniform eta offsets plus each nonzero offset in one component at a time.
    assert len(starts) == 21
    assert all(s.size == 3 for s in starts)
    assert_allclose(starts[1][1:], [0.1, 0.1])
    assert_allclose(starts[3][1:], [0.1, 0.0])
    assert_allclose(starts[6][1:], [0.0, -0.1])
    assert_allclose(starts[7][0], starts[0][0] * 2.0)


def test_lowest_action_wins_ties_to_first_start(poisson):
    problem = ShootingProblem(model=poisson, T=1.0, x_target=[2.0])
    best = solve_bvp(problem, starts=[np.array([1.0]), np.array([1.0])])
    assert best.start_index == 0
    assert [s["index"] for s in best.starts] == [0, 1]


def test_trajectory_record_round_trip(poisson):
    trajectory = hitting_exponent(poisson, [1.5], 1.0, settings=QUICK).trajectory
    again = OptimalTrajectory.from_record(json.loads(safe_json_dumps(trajectory.to_record())))
    assert again.action == trajectory.action
    assert_allclose(again.x, trajectory.x)
    assert again.u.shape == (trajectory.t.size, 0)
    assert again.to_dict() == trajectory.to_dict()


def test_flux_and_contracted_systems_agree_on_optimal_fluxes(calcium):
    x, u, eta = np.array([0.4]), calcium.u0, np.array([0.3, -0.1])
    xdot = np.array([0.2])
    contracted = assemble_contracted_el_rhs(ELState(t=0.0, x=x, xdot=xdot, u=u, eta=eta), calcium)
    zdot = contracted_derivatives(xdot, x, u, calcium).zdot
    flux = assemble_flux_el_rhs(ELState(t=0.0, x=x, xdot=xdot, u=u, eta=eta, z=np.zeros(2), zdot=zdot), calcium)
    xi = calcium.network.xi.astype(float)
    assert_allclose(xi.T @ flux.zddot, contracted.xddot, rtol=1e-8)
    assert_allclose(flux.etadot, contracted.etadot, rtol=1e-8, atol=1e-12)
    assert flux.lagrangian == pytest.approx(contracted.lagrangian, rel=1e-10)


def test_el_residual_needs_three_nodes(poisson):
    trajectory = hitting_exponent(poisson, [1.5], 1.0, settings=QUICK).trajectory
    assert el_residual(trajectory, poisson) <= 1e-8
    trajectory.t = trajectory.t[:2]
    with pytest.raises(ValueError):
        el_residual(trajectory, poisson)


def test_optimal_action_matches_the_action_functional(poisson):
    trajectory = hitting_exponent(poisson, [1.5], 1.0, settings=QUICK).trajectory
    assert action(trajectory.smooth_path(), poisson).total == pytest.approx(trajectory.action, abs=1e-6)


def test_degenerate_flux_falls_back_to_the_contracted_system(calcium):
    x, u, eta = np.array([0.4]), np.array([0.3, 8.0]), np.array([0.2, -0.05])
    state = ELState.from_fluxes(calcium, 0.0, np.array([0.0, 0.3]), np.array([0.0, 0.5]), u, eta, x0=np.array([0.1]))
    flux = assemble_flux_el_rhs(state, calcium)
    contracted = assemble_contracted_el_rhs(ELState(t=0.0, x=x, xdot=np.array([0.5]), u=u, eta=eta), calcium)
    expected = contracted_derivatives(np.array([0.5]), x, u, calcium)
    xi = calcium.network.xi.astype(float)
    assert np.all(flux.zdot > 0.0)
    assert_allclose(flux.zdot, expected.zdot, rtol=1e-10)
    assert_allclose(xi.T @ flux.zddot, contracted.xddot, rtol=1e-5, atol=1e-8)
    assert_allclose(flux.etadot, contracted.etadot, rtol=1e-10, atol=1e-12)
    assert flux.lagrangian == pytest.approx(expected.value, rel=1e-12)


def test_flux_equations_make_the_discrete_action_stationary(calcium):
    # Three-node stencil around t = 0 on the quadratic flux path with the
    # assembled acceleration; the gradient of the discretized constrained
    # action in the middle node must vanish up to O(h^2).
    net = calcium.network
    xi = net.xi.astype(float)
    x0 = calcium.x0
    z, zdot = np.array([0.1, 0.3]), np.array([0.7, 1.1])
    u, eta = np.array([0.2, 9.0]), np.array([0.3, -0.1])
    rhs = assemble_flux_el_rhs(ELState.from_fluxes(calcium, 0.0, z, zdot, u, eta, x0=x0), calcium)
    h = 2e-4

    def stationarity(accel):
        left = z - h * zdot + 0.5 * h * h * accel
        right = z + h * zdot + 0.5 * h * h * accel

        def discrete_action(mid):
            total = 0.0
            for a, b, s in ((left, mid, -0.5 * h), (mid, right, 0.5 * h)):
                x_mid = x0 + 0.5 * (a + b) @ xi
                u_mid = u + s * rhs.udot
                eta_mid = eta + s * rhs.etadot
                total += h * (flux_lagrangian((b - a) / h, x_mid, u_mid, net) + eta_mid @ calcium.drift_at(u_mid, x_mid))
            return total

        return gradient(discrete_action, z, step=1e-7) / h

    accel = rhs.zddot
    correction = np.linalg.solve(jacobian(stationarity, accel, step=1e-3), stationarity(accel))
    assert_allclose(accel - correction, rhs.zddot, rtol=1e-5, atol=1e-6)


def test_segmented_jacobian_matches_finite_differences(calcium):
    settings = ShootingSettings(segments=3, collocation_seed=0)
    problem = ShootingProblem(model=calcium, T=0.6, x_target=[0.3], settings=settings)
    residual = SegmentedResidual(problem)
    guess = np.concatenate([calcium.mean_drift(calcium.x0, calcium.u0), [0.05, -0.02]])
    w = residual.pack(residual.chopped(guess))
    assert w.size == 3 + 2 * 6
    f = residual(w)
    assert f.size == w.size
    assert_allclose(f[: 2 * 6], 0.0, atol=1e-12)
    assert_allclose(residual.jacobian(w, f), jacobian(residual, w, step=1e-6), rtol=1e-3, atol=1e-4)


def test_single_and_multiple_shooting_agree(poisson):
    single = solve_bvp(ShootingProblem(model=poisson, T=1.0, x_target=[1.5], settings=replace(QUICK, segments=1)))
    multiple = solve_bvp(ShootingProblem(model=poisson, T=1.0, x_target=[1.5], settings=replace(QUICK, segments=7)))
    assert multiple.action == pytest.approx(single.action, rel=1e-8)
    assert_allclose(multiple.unknowns, single.unknowns, rtol=1e-6)
    assert_allclose(multiple.x, single.x, atol=1e-8)


def test_collocation_nodes_seed_every_segment(calcium):
    settings = ShootingSettings(segments=4, collocation_seed=32)
    problem = ShootingProblem(model=calcium, T=1.0, x_target=[0.3], settings=settings)
    nodes = collocation_nodes(problem)
    assert nodes.shape == (4, 6)
    assert_allclose(nodes[0, [0, 2, 3]], [calcium.x0[0], *calcium.u0])
    assert np.all(np.isfinite(nodes))
    assert collocation_nodes(ShootingProblem(model=calcium, T=1.0, x_target=[0.3], settings=QUICK)) is not None
    assert collocation_nodes(ShootingProblem(model=calcium, T=1.0, x_target=[0.3], settings=replace(QUICK, collocation_seed=0))) is None


@pytest.mark.slow
def test_shooting_and_collocation_agree_on_calcium(calcium):
    fp = fixed_point(calcium)
    model = calcium.with_initial(x0=fp.x, u0=fp.u)
    problem = ShootingProblem(model=model, T=5.0, x_target=fp.x + 0.15)
    shot = solve_bvp(problem)
    assert el_residual(shot, model) <= 1e-4
    assert np.max(np.abs(shot.eta_terminal)) <= 1e-8
    direct = collocation_minimize(problem, 128)
    assert direct.converged
    assert direct.action == pytest.approx(shot.action, rel=1e-3)


@pytest.mark.slow
def test_action_grows_along_a_target_ray(calcium):
    fp = fixed_point(calcium)
    model = calcium.with_initial(x0=fp.x, u0=fp.u)
    settings = ShootingSettings(output_intervals=256)
    steps = (0.03, 0.06, 0.09, 0.12, 0.15)
    values = [hitting_exponent(model, fp.x + step, 5.0, settings=settings).action for step in steps]
    assert 0.0 < values[0]
    assert all(a < b for a, b in zip(values, values[1:]))

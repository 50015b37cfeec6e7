# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from fbcap.belief_mdp import (GridValueFunction, ViConfig, belief_update, bellman_residual_hstar,
                              disturbance_dist, ising_bellman_operator, ising_hstar, ising_policy_from_actions,
                              ising_reward, ising_state_update, reward, simplex_lattice, simulate_policy,
                              value_iteration)
from fbcap.channels import make_bsc, make_useless
from fbcap.utils import ConfigError, ZeroProbabilityError

from conftest import A_STAR, RHO_STAR


@pytest.fixture(scope="module")
def vi_full(ising):
    return value_iteration(ising, ViConfig(grid=1000, iters=50))


def test_closed_form_constants(sol):
    assert sol.a == pytest.approx(A_STAR, abs=1e-10)
    assert sol.rho_star == pytest.approx(RHO_STAR, abs=1e-10)
    assert sol.a ** 3 == pytest.approx((1 - sol.a) ** 4, abs=1e-12)
    assert np.allclose(sol.sink_beliefs(), [0.0, 0.3790252, 0.6209748, 1.0], atol=1e-6)


def test_disturbance_and_update_uniform_policy(ising):
    beta = np.array([0.5, 0.5])
    Pi = np.full((2, 2), 0.5)
    assert np.allclose(disturbance_dist(beta, Pi, ising), [0.5, 0.5])
    # y=0 vem de x=0 (s'=0) com massa 3/8 e de x=1 (s'=1) com massa 1/8
    assert np.allclose(belief_update(beta, Pi, 0, ising), [0.75, 0.25])


def test_belief_update_zero_probability(ising):
    beta = np.array([1.0, 0.0])
    Pi = np.array([[1.0, 0.0], [0.5, 0.5]])
    with pytest.raises(ZeroProbabilityError):
        belief_update(beta, Pi, 1, ising)


def test_shape_mismatch(ising):
    with pytest.raises(ConfigError):
        reward(np.array([1.0]), np.eye(2), ising)


def test_ising_primitives_match_generic(ising):
    rng = np.random.default_rng(5)
    for _ in range(100):
        z = rng.uniform(0.01, 0.99)
        delta = rng.uniform(0, z)
        gamma = rng.uniform(0, 1 - z)
        beta = np.array([z, 1 - z])
        Pi = ising_policy_from_actions(z, delta, gamma)
        assert ising_reward(z, delta, gamma) == pytest.approx(reward(beta, Pi, ising), abs=1e-10)
        for y in (0, 1):
            assert ising_state_update(z, delta, gamma, y) == pytest.approx(
                belief_update(beta, Pi, y, ising)[0], abs=1e-10)


def test_ising_state_update_rejects_action_outside_box():
    with pytest.raises(ConfigError):
        ising_state_update(0.3, 0.5, 0.1, 0)


def test_hstar_solves_bellman_equation(sol):
    assert bellman_residual_hstar(sol, points=2000, tol=1e-7) <= 1e-5


def test_hstar_is_symmetric(sol):
    z = np.linspace(0, 1, 101)
    assert np.allclose(ising_hstar(z, sol), ising_hstar(1 - z, sol), atol=1e-12)


def test_single_iteration_bounds(ising):
    res = value_iteration(ising, ViConfig(grid=201, iters=1))
    assert res.rho_low == pytest.approx(math.log2(5) - 2, abs=1e-4)
    assert res.rho_high == pytest.approx(1.0, abs=1e-6)
    assert res.rho_low <= RHO_STAR <= res.rho_high


def test_full_value_iteration_brackets_capacity(vi_full):
    assert vi_full.rho_low <= RHO_STAR <= vi_full.rho_high
    assert vi_full.rho_high - vi_full.rho_low < 2e-3
    assert len(vi_full.trace) == 50
    df = vi_full.to_frame()
    assert list(df.columns) == ["z", "h", "delta", "gamma"]
    assert len(df) == 1000


def test_value_function_close_to_hstar(vi_full, sol):
    z = vi_full.h.grid
    hstar = ising_hstar(z, sol)
    diff = vi_full.h.values - (hstar - hstar[0])
    assert np.max(np.abs(diff)) < 0.05


def test_simulated_beliefs_concentrate_on_sinks(ising, vi_full, sol):
    _, hist, avg = simulate_policy(ising, vi_full, steps=20_000, seed=1)
    freq = np.sort(hist["frequency"].to_numpy())[::-1]
    assert freq[:4].sum() >= 0.99
    top = np.sort(hist["cell_center"].to_numpy()[np.argsort(hist["frequency"].to_numpy())[-4:]])
    assert np.allclose(top, sol.sink_beliefs(), atol=1e-3)
    assert avg == pytest.approx(RHO_STAR, abs=0.01)


def test_span_bounds_are_monotone(vi_full):
    lo = vi_full.trace["rho_low"].to_numpy()
    hi = vi_full.trace["rho_high"].to_numpy()
    assert np.all(np.diff(lo) >= -1e-8)
    assert np.all(np.diff(hi) <= 1e-8)
    # o resultado final é o traço alargado pelo erro de interpolação
    assert vi_full.rho_low <= lo[-1]
    assert vi_full.rho_high >= hi[-1]
    assert vi_full.rho_high - hi[-1] < 1e-4


def test_simulation_needs_steps_after_burn_in(ising, vi_full):
    with pytest.raises(ConfigError):
        simulate_policy(ising, vi_full, steps=500, burn_in=1000)


def test_bellman_operator_keeps_constant(sol):
    z = np.linspace(0, 1, 51)
    th, u, v = ising_bellman_operator(lambda t: np.zeros_like(t), z)
    th2, _, _ = ising_bellman_operator(lambda t: np.full_like(t, 3.0), z)
    assert np.allclose(th2 - th, 3.0)
    assert np.all((u >= 0) & (u <= 1) & (v >= 0) & (v <= 1))


def test_generic_path_on_memoryless_channel():
    res = value_iteration(make_bsc(0.1), ViConfig(iters=5, action_lattice=50))
    assert res.rho_low == pytest.approx(0.531004, abs=1e-5)
    assert res.rho_high == pytest.approx(0.531004, abs=1e-5)
    assert value_iteration(make_useless(), ViConfig(iters=2)).rho_high == pytest.approx(0.0, abs=1e-12)


def test_simplex_lattice_counts():
    pts = simplex_lattice(3, 4)
    assert len(pts) == 15
    assert np.allclose(pts.sum(axis=1), 1.0)


def test_grid_value_function_validation():
    with pytest.raises(ConfigError):
        GridValueFunction.on_interval([0.0, 0.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(ConfigError):
        value_iteration(make_bsc(0.1), ViConfig(iters=0))


@pytest.mark.parametrize("which", ["zero", "hstar"])
def test_bellman_operator_is_symmetric(sol, which):
    z = np.linspace(0, 1, 101)
    h = (lambda t: np.zeros_like(t)) if which == "zero" else (lambda t: ising_hstar(t, sol))
    th, u, v = ising_bellman_operator(h, z)
    assert np.allclose(th, th[::-1], atol=1e-7)

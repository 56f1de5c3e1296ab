"""Vector field, integration, equilibrium solver, biomass bounds."""

import numpy as np
import pytest

from streampop import (
    ConvergenceError,
    LogisticParams,
    StreamNetwork,
    biomass_upper_bound,
    build_connection_matrix,
    canonical_three_node,
    integrate,
    network_biomass,
    perron_flow_vector,
    positive_equilibrium,
    rhs,
    straight_chain,
)

from helpers import random_homogeneous_network


def test_rhs_hand_computed():
    net = canonical_three_node("straight", 0.5, 0.5)
    params = LogisticParams(r=(2.0, 0.0, 1.0), K=2.0)
    u = np.array([1.0, 2.0, 4.0])
    # logistic terms: 2*1*(1-0.5)=1, 0, 1*4*(1-2)=-4
    # L @ u with d=q=0.5: L = [[-1, .5, 0], [1, -1.5, .5], [0, 1, -.5]]
    L = np.array([[-1.0, 0.5, 0.0], [1.0, -1.5, 0.5], [0.0, 1.0, -0.5]])
    expected = np.array([1.0, 0.0, -4.0]) + L @ u
    assert np.allclose(rhs(u, net, params), expected, atol=1e-14)


def test_rhs_conserves_mass_under_movement():
    # summed movement cancels: total change equals summed logistic growth
    rng = np.random.default_rng(61)
    for _ in range(30):
        net = random_homogeneous_network(rng, n_max=9)
        params = LogisticParams(r=tuple(rng.uniform(0.1, 2.0, net.n)), K=1.0)
        u = rng.uniform(0.0, 2.0, net.n)
        logistic = params.rates() * u * (1.0 - u / params.K)
        assert abs(rhs(u, net, params).sum() - logistic.sum()) < 1e-13


def test_integrate_single_node_logistic_closed_form():
    net = StreamNetwork((0,), frozenset(), 1.0, 1.0)
    r, K, u0 = 1.3, 2.0, 0.05
    params = LogisticParams(r=(r,), K=K)
    traj = integrate(net, params, [u0], 10.0, samples=101)
    t = traj.times
    expected = K * u0 * np.exp(r * t) / (K + u0 * (np.exp(r * t) - 1.0))
    assert np.max(np.abs(traj.states[:, 0] - expected)) < 1e-7


def test_integrate_monotone_from_upper_solution():
    net = canonical_three_node("straight", 0.1, 0.3)
    params = LogisticParams(r=(1.0, 1.0, 1.0), K=2.0)
    upper = params.K * perron_flow_vector(net)
    traj = integrate(net, params, upper, 50.0, samples=201)
    diffs = np.diff(traj.states, axis=0)
    assert np.max(diffs) < 1e-7


def test_integrate_input_validation():
    net = canonical_three_node("straight", 1.0, 1.0)
    params = LogisticParams(r=(1.0, 1.0, 1.0), K=1.0)
    with pytest.raises(ValueError):
        integrate(net, params, [0.0, 0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        integrate(net, params, [-0.1, 0.5, 0.5], 1.0)
    with pytest.raises(ValueError):
        integrate(net, params, [1.0, 1.0, 1.0], 0.0)
    with pytest.raises(ValueError):
        integrate(net, params, [1.0, 1.0], 1.0)
    with pytest.raises(ValueError):
        integrate(net, params, [1.0, 1.0, 1.0], 1.0, t_eval=[0.5, 0.2])


def test_straight_chain_equilibrium_closed_form():
    d, q, K = 0.25, 0.75, 1.5
    net = canonical_three_node("straight", d, q)
    params = LogisticParams(r=(3.0, 0.0, 0.0), K=K)
    eq = positive_equilibrium(net, params)
    c = (d + q) / d
    expected = K * np.array([1.0, c, c * c])
    assert np.max(np.abs(eq.u_star - expected)) < 1e-9 * K * c * c
    assert eq.residual < 1e-10
    assert network_biomass(eq) == pytest.approx(expected.sum(), rel=1e-12)


def test_tributary_downstream_allocation_equilibrium():
    d, q, K = 0.1, 0.3, 3.0
    net = canonical_three_node("tributary", d, q)
    eq = positive_equilibrium(net, LogisticParams(r=(0.0, 0.0, 5.0), K=K))
    frac = d / (d + q)
    expected = np.array([frac * K, frac * K, K])
    assert np.max(np.abs(eq.u_star - expected)) < 1e-10
    assert eq.biomass == pytest.approx((2 * frac + 1) * K, abs=1e-9)


def test_equilibrium_positive_and_below_bound():
    rng = np.random.default_rng(67)
    for _ in range(40):
        net = random_homogeneous_network(rng, n_max=8, d_range=(0.3, 1.5), q_range=(0.0, 1.5))
        K = float(rng.uniform(0.5, 3.0))
        rates = rng.uniform(0.0, 3.0, net.n)
        if not rates.any():
            rates[int(rng.integers(net.n))] = 1.0
        eq = positive_equilibrium(net, LogisticParams(r=tuple(rates), K=K))
        assert eq.u_star.min() > 0
        assert eq.residual < 1e-10
        assert eq.biomass <= biomass_upper_bound(net, K) + 1e-8


def test_equilibrium_agrees_with_long_integration():
    rng = np.random.default_rng(71)
    for _ in range(5):
        net = random_homogeneous_network(rng, n_max=5, d_range=(0.4, 1.2), q_range=(0.0, 1.0))
        rates = rng.uniform(0.3, 2.0, net.n)
        params = LogisticParams(r=tuple(rates), K=1.0)
        eq = positive_equilibrium(net, params)
        traj = integrate(net, params, np.full(net.n, 0.05), 400.0, samples=11)
        assert np.max(np.abs(traj.states[-1] - eq.u_star)) < 1e-6


def test_biomass_upper_bound_reference_values():
    # q/d = 3, K = 3: tributary 18, straight 63, distributary 27
    d, q, K = 0.1, 0.3, 3.0
    assert biomass_upper_bound(canonical_three_node("tributary", d, q), K) == pytest.approx(18.0, abs=1e-12)
    assert biomass_upper_bound(canonical_three_node("straight", d, q), K) == pytest.approx(63.0, abs=1e-10)
    assert biomass_upper_bound(canonical_three_node("distributary", d, q), K) == pytest.approx(27.0, abs=1e-12)
    with pytest.raises(ValueError):
        biomass_upper_bound(canonical_three_node("straight", 0.0, 1.0), K)


def test_bound_attained_only_on_headwater_allocations():
    d, q, K = 0.2, 0.4, 1.0
    net = canonical_three_node("straight", d, q)
    bound = biomass_upper_bound(net, K)
    at_face = positive_equilibrium(net, LogisticParams(r=(2.0, 0.0, 0.0), K=K))
    assert abs(at_face.biomass - bound) < 1e-9
    off_face = positive_equilibrium(net, LogisticParams(r=(0.0, 2.0, 0.0), K=K))
    assert off_face.biomass < bound - 1e-6


def test_params_validation():
    with pytest.raises(ValueError):
        LogisticParams(r=(), K=1.0)
    with pytest.raises(ValueError):
        LogisticParams(r=(-1.0, 2.0), K=1.0)
    with pytest.raises(ValueError):
        LogisticParams(r=(0.0, 0.0), K=1.0)
    with pytest.raises(ValueError):
        LogisticParams(r=(1.0,), K=0.0)
    with pytest.raises(ValueError):
        positive_equilibrium(
            canonical_three_node("straight", 1.0, 1.0),
            LogisticParams(r=(1.0, 1.0), K=1.0),
        )


def test_trajectory_arrays_read_only():
    net = canonical_three_node("straight", 1.0, 1.0)
    traj = integrate(net, LogisticParams(r=(1.0, 1.0, 1.0), K=1.0), [0.1, 0.1, 0.1], 1.0)
    with pytest.raises(ValueError):
        traj.states[0, 0] = 5.0

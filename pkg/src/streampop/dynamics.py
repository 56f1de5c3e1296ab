"""Time dynamics and equilibria of the logistic model on a stream network.

Each node carries logistic growth r_i u_i (1 - u_i / K) with a shared
carrying capacity; movement redistributes individuals along the edges. With
movement present and at least one positive growth rate, the system has a
unique positive equilibrium that attracts every nontrivial nonnegative state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import ConvergenceError
from .network import ConnectionMatrix, StreamNetwork, build_connection_matrix
from .spectral import perron_flow_vector

_EQ_RESIDUAL = 1e-10
_NEWTON_MAX = 100
_MAX_HALVINGS = 60
_FLOOR_FRACTION = 1e-12


@dataclass(frozen=True)
class LogisticParams:
    """Per-node growth rates and the common carrying capacity."""

    r: tuple[float, ...]
    K: float

    def __post_init__(self):
        rates = tuple(float(x) for x in np.asarray(self.r, dtype=float).reshape(-1))
        if len(rates) == 0:
            raise ValueError("r must be nonempty")
        if not all(np.isfinite(x) and x >= 0 for x in rates):
            raise ValueError("growth rates must be finite and nonnegative")
        if not sum(rates) > 0:
            raise ValueError("at least one growth rate must be positive")
        object.__setattr__(self, "r", rates)
        k = float(self.K)
        if not (np.isfinite(k) and k > 0):
            raise ValueError("K must be finite and positive")
        object.__setattr__(self, "K", k)

    @property
    def n(self) -> int:
        return len(self.r)

    @property
    def r_total(self) -> float:
        return float(sum(self.r))

    def rates(self) -> np.ndarray:
        return np.asarray(self.r, dtype=float)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution: times, per-node states, and the biomass total."""

    times: np.ndarray
    states: np.ndarray
    total: np.ndarray

    def __post_init__(self):
        for arr in (self.times, self.states, self.total):
            arr.setflags(write=False)


@dataclass(frozen=True)
class Equilibrium:
    """The positive equilibrium, its defect norm, and the network biomass."""

    u_star: np.ndarray
    residual: float
    biomass: float

    def __post_init__(self):
        self.u_star.setflags(write=False)


def _check_state(u, n: int) -> np.ndarray:
    arr = np.asarray(u, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"state has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("state must be finite")
    return arr


def rhs(u, net: StreamNetwork, params: LogisticParams, conn: ConnectionMatrix | None = None) -> np.ndarray:
    """Instantaneous change per node: logistic growth plus net movement."""
    if conn is None:
        conn = build_connection_matrix(net)
    state = _check_state(u, net.n)
    rates = params.rates()
    if rates.size != net.n:
        raise ValueError("params and network sizes differ")
    return rates * state * (1.0 - state / params.K) + conn.matrix @ state


def integrate(
    net: StreamNetwork,
    params: LogisticParams,
    u0,
    t_end: float,
    tol: float = 1e-9,
    *,
    t_eval=None,
    samples: int = 401,
) -> Trajectory:
    """Solve the system from u0 over [0, t_end], sampled on a fixed grid.

    Adaptive embedded Runge-Kutta at relative tolerance `tol` and absolute
    tolerance 1e-12*K; a bounded-step retry handles runs the adaptive
    controller rejects. Sampled states are clamped at 0 to absorb solver
    wiggle around the boundary.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    start = _check_state(u0, net.n)
    if np.any(start < 0) or not np.any(start > 0):
        raise ValueError("u0 must be nonnegative and not identically zero")
    conn = build_connection_matrix(net)
    rates = params.rates()
    if rates.size != net.n:
        raise ValueError("params and network sizes differ")
    L = conn.matrix
    K = params.K

    def field(_t, u):
        return rates * u * (1.0 - u / K) + L @ u

    if t_eval is None:
        grid = np.linspace(0.0, float(t_end), int(samples))
    else:
        grid = np.asarray(t_eval, dtype=float).reshape(-1)
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ValueError("t_eval must be strictly increasing")
        if grid[0] < 0 or grid[-1] > t_end:
            raise ValueError("t_eval must lie within [0, t_end]")

    atol = 1e-12 * K
    sol = solve_ivp(field, (0.0, float(t_end)), start, method="RK45", t_eval=grid, rtol=tol, atol=atol)
    if not sol.success:
        max_step = 1e-3 / (net.d + net.q + float(rates.max()))
        sol = solve_ivp(
            field,
            (0.0, float(t_end)),
            start,
            method="RK45",
            t_eval=grid,
            rtol=tol,
            atol=atol,
            max_step=max_step,
        )
    if not sol.success:
        raise ConvergenceError(f"integration failed: {sol.message}")
    states = sol.y.T
    if not np.all(np.isfinite(states)):
        raise ConvergenceError("integration produced non-finite state")
    states = np.maximum(states, 0.0)
    return Trajectory(times=sol.t.copy(), states=states, total=states.sum(axis=1))


def _newton(L: np.ndarray, rates: np.ndarray, K: float, u0: np.ndarray) -> tuple[np.ndarray, float, bool]:
    floor = _FLOOR_FRACTION * K
    # Polish far past the acceptance gate: quadratic convergence makes the
    # extra iterations cheap and keeps sums of per-node defects near zero.
    problem_scale = max(1.0, float(rates.max()) * K)
    target = 1e-14 * problem_scale
    gate = _EQ_RESIDUAL * problem_scale

    def defect(x):
        return rates * x * (1.0 - x / K) + L @ x

    u = u0.copy()
    res = float(np.max(np.abs(defect(u))))
    for _ in range(_NEWTON_MAX):
        if res < target:
            break
        jac = L + np.diag(rates * (1.0 - 2.0 * u / K))
        try:
            step = np.linalg.solve(jac, -defect(u))
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        improved = False
        for _ in range(_MAX_HALVINGS):
            cand = np.maximum(u + scale * step, floor)
            cres = float(np.max(np.abs(defect(cand))))
            if cres < res:
                u, res = cand, cres
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
    return u, res, res < gate


def _relax(L: np.ndarray, rates: np.ndarray, K: float, u0: np.ndarray) -> np.ndarray:
    # Monotone descent from the upper solution: integrate until the defect is
    # small enough for Newton to take over.
    def field(_t, u):
        return rates * u * (1.0 - u / K) + L @ u

    u = u0.copy()
    target = 1e-6 * max(1.0, float(rates.max()) * K)
    span = 10.0
    for _ in range(40):
        sol = solve_ivp(field, (0.0, span), u, method="RK45", rtol=1e-9, atol=1e-12 * K)
        if not sol.success:
            break
        u = np.maximum(sol.y[:, -1], _FLOOR_FRACTION * K)
        if float(np.max(np.abs(field(0.0, u)))) < target:
            break
        span = min(2.0 * span, 500.0)
    return u


def positive_equilibrium(net: StreamNetwork, params: LogisticParams) -> Equilibrium:
    """The unique positive equilibrium, by damped Newton from the upper solution.

    The start K*v (v the flow vector) dominates the equilibrium componentwise,
    so iterates descend toward it; steps are floored at 1e-12*K to stay in the
    positive cone. If Newton stalls, monotone time integration from the same
    start re-enters its basin.
    """
    if params.n != net.n:
        raise ValueError("params and network sizes differ")
    conn = build_connection_matrix(net)
    upper = params.K * perron_flow_vector(net)
    rates = params.rates()
    L = conn.matrix

    u, res, ok = _newton(L, rates, params.K, upper)
    if not ok:
        u, res, ok = _newton(L, rates, params.K, _relax(L, rates, params.K, upper))
    if not ok:
        raise ConvergenceError(f"equilibrium solver stalled at residual {res:.3e}")
    if u.min() <= 0:
        raise ConvergenceError("equilibrium iterate lost positivity")
    return Equilibrium(u_star=u, residual=res, biomass=float(u.sum()))


def network_biomass(eq: Equilibrium) -> float:
    """Total population held at equilibrium."""
    return float(np.sum(eq.u_star))


def biomass_upper_bound(net: StreamNetwork, K: float) -> float:
    """Closed-form biomass ceiling K * sum_i (1 + q/d)^level(i); needs d > 0."""
    if not (np.isfinite(K) and K > 0):
        raise ValueError("K must be finite and positive")
    if net.d == 0.0:
        raise ValueError("bound requires d > 0")
    ratio = 1.0 + net.q / net.d
    return float(K * np.sum(np.power(ratio, np.asarray(net.levels, dtype=float))))

"""Growth-rate spectral machinery for the network logistic model.

The metapopulation growth rate is the spectral bound (largest real part over
the spectrum) of J = L + diag(r), where L is the movement matrix and r the
per-node growth-rate allocation. J is essentially nonnegative, so for
irreducible L the bound is a Perron root reachable by power iteration on a
shifted nonnegative matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, InvalidNetworkError
from .network import (
    ConnectionMatrix,
    StreamNetwork,
    downstream_neighbor_counts,
    ensure_valid,
)

_RQ_TOL = 1e-12
_MAX_ITERATIONS = 10**6
_SQUARINGS = 48
_RESIDUAL_BOUND = 1e-10


@dataclass(frozen=True)
class PerronPair:
    """Positive right/left eigenvectors of J at the growth rate.

    right sums to 1; left is scaled so left @ right = 1. `normalized` records
    that both conventions hold.
    """

    right: np.ndarray
    left: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.right.setflags(write=False)
        self.left.setflags(write=False)


@dataclass(frozen=True)
class SpectralReport:
    """Growth rate with its bounds and Perron data.

    theta is the positive null weight vector of the movement matrix (summing
    to 1). For the d = 0 analytic limit the matrix is reducible; rho then
    comes from the zero-diffusion closed form and lower_bound/theta/pair are
    None.
    """

    rho: float
    lower_bound: float | None
    upper_bound: float
    theta: np.ndarray | None
    residual: float
    pair: PerronPair | None

    def __post_init__(self):
        if self.theta is not None:
            self.theta.setflags(write=False)


@dataclass(frozen=True)
class PerturbationSpec:
    """A trace-zero diagonal reallocation direction around the uniform allocation.

    The gain node receives +1; every other node i loses `losses[i]` >= 0, with
    the losses summing to 1. `epsilon` is the step used by finite-difference
    checks of the induced growth-rate derivative.
    """

    gain_node: int
    losses: tuple[float, ...]
    epsilon: float = 1e-5

    def __post_init__(self):
        n = len(self.losses)
        if not 0 <= self.gain_node < n:
            raise ValueError("gain_node out of range")
        losses = tuple(float(x) for x in self.losses)
        object.__setattr__(self, "losses", losses)
        if any(x < 0 for x in losses):
            raise ValueError("losses must be nonnegative")
        if losses[self.gain_node] != 0.0:
            raise ValueError("gain node cannot also carry a loss")
        if abs(sum(losses) - 1.0) > 1e-12:
            raise ValueError("losses must sum to 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def uniform(cls, gain_node: int, n: int, epsilon: float = 1e-5) -> "PerturbationSpec":
        if n < 2:
            raise ValueError("need at least two nodes")
        share = 1.0 / (n - 1)
        losses = tuple(0.0 if i == gain_node else share for i in range(n))
        return cls(gain_node, losses, epsilon)

    @classmethod
    def concentrated(cls, gain_node: int, loss_node: int, n: int, epsilon: float = 1e-5) -> "PerturbationSpec":
        if loss_node == gain_node:
            raise ValueError("loss node must differ from gain node")
        losses = tuple(1.0 if i == loss_node else 0.0 for i in range(n))
        return cls(gain_node, losses, epsilon)

    def direction(self) -> np.ndarray:
        """Diagonal of the perturbation matrix: +1 at the gain node, -losses elsewhere."""
        e = -np.asarray(self.losses, dtype=float)
        e[self.gain_node] = 1.0
        return e


def _perron(mat: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Dominant eigenvalue and positive eigenvectors of an essentially nonnegative matrix.

    Shifted power iteration on A = mat + cI with c = 1 + max|diag(mat)|; A is
    nonnegative with positive diagonal, hence primitive when irreducible. The
    start vector comes from repeated squaring of A (nonnegative products only,
    so no cancellation), which collapses everything but the dominant
    direction; the plain iteration then finishes under the Rayleigh-quotient
    rule. Returns (rho, v, w): v > 0 sums to 1, w > 0 with w @ v = 1.
    """
    n = mat.shape[0]
    if n == 1:
        return float(mat[0, 0]), np.ones(1), np.ones(1)
    c = 1.0 + float(np.max(np.abs(np.diag(mat))))
    a = mat + c * np.eye(n)
    b = a / np.max(a)
    for _ in range(_SQUARINGS):
        b = b @ b
        top = float(b.max())
        if not np.isfinite(top) or top <= 0.0:
            raise ConvergenceError("matrix powers degenerated; input may be reducible")
        b = b / top
    ones = np.ones(n)
    v = b @ ones
    w = b.T @ ones
    if v.min() <= 0.0 or w.min() <= 0.0:
        raise ConvergenceError("iterate left the positive cone; input may be reducible")
    v = v / v.sum()
    w = w / w.sum()
    lam = float(w @ (a @ v) / (w @ v))
    for _ in range(_MAX_ITERATIONS):
        v = a @ v
        v = v / v.sum()
        w = a.T @ w
        w = w / w.sum()
        new = float(w @ (a @ v) / (w @ v))
        done = abs(new - lam) < _RQ_TOL * max(1.0, abs(new))
        lam = new
        if done:
            break
    else:
        raise ConvergenceError("power iteration hit the iteration cap")
    w = w / (w @ v)
    return lam - c, v, w


def _as_rates(r, n: int) -> np.ndarray:
    arr = np.asarray(r, dtype=float).reshape(-1)
    if arr.shape != (n,):
        raise ValueError(f"allocation has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("allocation must be finite")
    return arr


def stationary_distribution(conn: ConnectionMatrix) -> np.ndarray:
    """Positive null weight vector theta of the movement matrix, summing to 1."""
    net = conn.network
    if net.n == 1:
        return np.ones(1)
    if net.d == 0.0:
        raise InvalidNetworkError("movement matrix is reducible at d = 0")
    rho, theta, _ = _perron(conn.matrix)
    if float(np.max(np.abs(conn.matrix @ theta))) > _RESIDUAL_BOUND:
        raise ConvergenceError("null vector residual above tolerance")
    return theta


def growth_rate(conn: ConnectionMatrix, r) -> SpectralReport:
    """Growth rate of J = L + diag(r), with bounds, theta, and the Perron pair.

    For d = 0 (reducible movement) the zero-diffusion closed form supplies
    rho; bounds that need theta are None in that case.
    """
    net = conn.network
    rates = _as_rates(r, net.n)
    if net.d == 0.0 and net.n > 1:
        rho = growth_rate_zero_diffusion(net, net.q, rates)
        return SpectralReport(
            rho=rho,
            lower_bound=None,
            upper_bound=float(rates.max()),
            theta=None,
            residual=0.0,
            pair=None,
        )
    jac = conn.matrix + np.diag(rates)
    rho, v, w = _perron(jac)
    if np.ptp(rates) == 0.0:
        # uniform allocation: ones is the exact left eigenvector, and v sums
        # to 1 so the w @ v = 1 scaling is already satisfied
        w = np.ones(net.n)
    residual = float(np.max(np.abs(jac @ v - rho * v)))
    if residual > _RESIDUAL_BOUND:
        raise ConvergenceError(f"eigenpair residual {residual:.3e} above {_RESIDUAL_BOUND:.0e}")
    theta = stationary_distribution(conn) if net.n > 1 else np.ones(1)
    return SpectralReport(
        rho=float(rho),
        lower_bound=float(theta @ rates),
        upper_bound=float(rates.max()),
        theta=theta,
        residual=residual,
        pair=PerronPair(right=v, left=w),
    )


def growth_rate_bounds(conn: ConnectionMatrix, r) -> tuple[float, float]:
    """Lower and upper growth-rate bounds (theta @ r, max r) for r >= 0, r != 0."""
    rates = _as_rates(r, conn.network.n)
    if np.any(rates < 0) or not np.any(rates > 0):
        raise ValueError("allocation must be nonnegative and not identically zero")
    theta = stationary_distribution(conn)
    return float(theta @ rates), float(rates.max())


def growth_rate_mu(conn: ConnectionMatrix, r, mu: float) -> float:
    """Spectral bound of mu*L + diag(r); equals max(r) at mu = 0."""
    if not (np.isfinite(mu) and mu >= 0):
        raise ValueError("mu must be finite and nonnegative")
    rates = _as_rates(r, conn.network.n)
    if mu == 0.0:
        return float(rates.max())
    net = conn.network
    if net.d == 0.0 and net.n > 1:
        return growth_rate_zero_diffusion(net, mu * net.q, rates)
    rho, _, _ = _perron(mu * conn.matrix + np.diag(rates))
    return float(rho)


def perron_flow_vector(net: StreamNetwork) -> np.ndarray:
    """Null vector of the movement matrix in closed form: v_i = ((d+q)/d)^level(i)."""
    ensure_valid(net)
    if net.d == 0.0:
        raise ValueError("flow vector requires d > 0")
    ratio = (net.d + net.q) / net.d
    return np.power(ratio, np.asarray(net.levels, dtype=float))


def first_order_perturbation(net: StreamNetwork, spec: PerturbationSpec, r_total: float = 1.0) -> float:
    """Growth-rate derivative along a diagonal reallocation at the uniform baseline.

    At allocation r_total/n per node the left eigenvector is all ones, so the
    derivative is the weighted sum of the perturbation diagonal against the
    flow vector normalized to sum 1. The baseline total does not enter.
    """
    if not r_total > 0:
        raise ValueError("r_total must be positive")
    if len(spec.losses) != net.n:
        raise ValueError("perturbation length does not match network size")
    v = perron_flow_vector(net)
    v = v / v.sum()
    return float(spec.direction() @ v)


def growth_rate_zero_diffusion(net: StreamNetwork, q: float, r) -> float:
    """Closed-form growth rate in the pure-drift limit: max_i (r_i - a_i q).

    a_i counts the adjacent nodes one level further downstream; downstream end
    nodes have a_i = 0 and keep their full local rate.
    """
    if not (np.isfinite(q) and q >= 0):
        raise ValueError("q must be finite and nonnegative")
    rates = _as_rates(r, net.n)
    a = np.asarray(downstream_neighbor_counts(net), dtype=float)
    return float(np.max(rates - a * q))

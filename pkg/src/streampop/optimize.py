"""Allocation optimization over the resource simplex, plus verification harnesses.

The decision variable is the split of a fixed total growth rate across nodes.
Both objectives (growth rate, equilibrium biomass) are evaluated on a simplex
lattice, optionally followed by a local ascent from the best lattice point.
The verify_* functions package the recurring checks: small-diffusion growth
concentrates on a downstream end node, the uniform-allocation derivative is
largest toward the most downstream nodes, and biomass peaks exactly on the
headwater face.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import LogisticParams, biomass_upper_bound, positive_equilibrium
from .exceptions import ConvergenceError
from .network import (
    StreamNetwork,
    build_connection_matrix,
    downstream_end_nodes,
    ensure_valid,
    most_downstream_end_nodes,
)
from .spectral import PerturbationSpec, first_order_perturbation, growth_rate, growth_rate_mu

_GRID_GUARD = 10**7
_PROBE_BUDGET = 100_000
_ARGMAX_REL = 1e-9
_KKT_TOL = 1e-10


@dataclass(frozen=True)
class Allocation:
    """A nonnegative split of the total growth rate across nodes."""

    r: tuple[float, ...]
    r_total: float

    def __post_init__(self):
        vals = tuple(float(x) for x in self.r)
        object.__setattr__(self, "r", vals)
        total = float(self.r_total)
        object.__setattr__(self, "r_total", total)
        if not total > 0:
            raise ValueError("r_total must be positive")
        if any(not np.isfinite(x) or x < 0 for x in vals):
            raise ValueError("allocation entries must be finite and nonnegative")
        if abs(sum(vals) - total) > 1e-12 * total:
            raise ValueError("allocation does not sum to r_total")

    @classmethod
    def of(cls, values) -> "Allocation":
        vals = tuple(float(x) for x in np.asarray(values, dtype=float).reshape(-1))
        return cls(vals, sum(vals))

    def values(self) -> np.ndarray:
        return np.asarray(self.r, dtype=float)

    def __array__(self, dtype=None, copy=None):
        arr = self.values()
        return arr.astype(dtype) if dtype is not None else arr


@dataclass(frozen=True)
class MethodTrace:
    resolution: int
    probes: int
    refine_steps: int
    failures: tuple[str, ...]


@dataclass(frozen=True)
class OptimizationResult:
    objective: str
    best_allocation: Allocation
    best_value: float
    argmax_set: tuple[Allocation, ...]
    method_trace: MethodTrace


def simplex_grid(n: int, r_total: float, resolution: int) -> list[Allocation]:
    """All lattice allocations k_i * r_total / resolution with sum k_i = resolution."""
    if n < 1:
        raise ValueError("n must be positive")
    if resolution < 1:
        raise ValueError("resolution must be positive")
    if not r_total > 0:
        raise ValueError("r_total must be positive")
    count = math.comb(resolution + n - 1, n - 1)
    if count > _GRID_GUARD:
        raise ValueError(f"grid of {count} points exceeds the {_GRID_GUARD} guard")
    scale = r_total / resolution
    out = []
    slots = resolution + n - 1
    for dividers in itertools.combinations(range(slots), n - 1):
        ks = []
        prev = -1
        for pos in dividers:
            ks.append(pos - prev - 1)
            prev = pos
        ks.append(slots - 1 - prev)
        out.append(Allocation(tuple(k * scale for k in ks), r_total))
    return out


def probe_allocations(n: int, r_total: float, resolution: int) -> list[Allocation]:
    """Lattice allocations plus all vertices and edge midpoints.

    Vertices sit on every lattice; midpoints do only for even resolutions, so
    they are added explicitly and deduplicated.
    """
    pts = simplex_grid(n, r_total, resolution)
    seen = {p.r for p in pts}
    extra = []
    for i in range(n):
        vals = tuple(r_total if k == i else 0.0 for k in range(n))
        if vals not in seen:
            seen.add(vals)
            extra.append(Allocation(vals, r_total))
    half = 0.5 * r_total
    for i, j in itertools.combinations(range(n), 2):
        vals = tuple(half if k in (i, j) else 0.0 for k in range(n))
        if vals not in seen:
            seen.add(vals)
            extra.append(Allocation(vals, r_total))
    return pts + extra


def _effective_resolution(n: int, resolution: int) -> int:
    res = max(1, int(resolution))
    while res > 1 and math.comb(res + n - 1, n - 1) > _PROBE_BUDGET:
        res -= 1
    return res


def _project_simplex(y: np.ndarray, total: float) -> np.ndarray:
    # Euclidean projection onto {x >= 0, sum x = total}.
    desc = np.sort(y)[::-1]
    csum = np.cumsum(desc) - total
    ks = np.arange(1, y.size + 1)
    valid = desc - csum / ks > 0
    k = int(np.max(np.nonzero(valid)[0])) + 1
    tau = csum[k - 1] / k
    return np.maximum(y - tau, 0.0)


def _kkt_residual(r: np.ndarray, grad: np.ndarray, r_total: float) -> float:
    # First-order stationarity measure on the simplex: free coordinates share
    # one multiplier; bound coordinates may only want to decrease.
    free = r > 1e-15 * r_total
    if not np.any(free):
        return float(np.max(np.abs(grad)))
    mu = float(np.mean(grad[free]))
    resid = np.where(free, grad - mu, np.maximum(grad - mu, 0.0))
    return float(np.max(np.abs(resid)))


def _ascend_growth(conn, start: Allocation, start_val: float, r_total: float) -> tuple[Allocation, float, int]:
    r = start.values()
    value = start_val
    steps = 0
    for _ in range(200):
        report = growth_rate(conn, r)
        grad = report.pair.left * report.pair.right
        if _kkt_residual(r, grad, r_total) < _KKT_TOL:
            break
        scale = r_total
        moved = False
        while scale > 1e-16 * r_total:
            cand = _project_simplex(r + scale * grad, r_total)
            cval = growth_rate_mu(conn, cand, 1.0)
            if cval > value:
                r, value = cand, cval
                steps += 1
                moved = True
                break
            scale *= 0.5
        if not moved:
            break
    return Allocation.of(r), value, steps


def maximize_growth_rate(net: StreamNetwork, r_total: float, resolution: int = 50, refine: bool = True) -> OptimizationResult:
    """Grid search for the allocation maximizing the growth rate, with optional ascent.

    The ascent follows the eigenvalue gradient (the elementwise product of the
    left and right Perron vectors) projected onto the simplex, halving the
    step until improvement, and stops at a 1e-10 stationarity residual.
    """
    ensure_valid(net)
    if not r_total > 0:
        raise ValueError("r_total must be positive")
    conn = build_connection_matrix(net)
    res = _effective_resolution(net.n, resolution)
    probes = probe_allocations(net.n, r_total, res)
    values = []
    failures = []
    for alloc in probes:
        try:
            values.append(growth_rate_mu(conn, alloc.values(), 1.0))
        except ConvergenceError as exc:
            failures.append(f"growth at {alloc.r}: {exc}")
            values.append(-np.inf)
    best_idx = int(np.argmax(values))
    best_alloc, best_val = probes[best_idx], float(values[best_idx])
    steps = 0
    if refine and np.isfinite(best_val):
        refined, rval, steps = _ascend_growth(conn, best_alloc, best_val, r_total)
        if rval > best_val and refined.r not in {p.r for p in probes}:
            probes = probes + [refined]
            values = values + [rval]
            best_alloc, best_val = refined, rval
    tol = _ARGMAX_REL * abs(best_val)
    argmax = tuple(p for p, v in zip(probes, values) if v >= best_val - tol)
    trace = MethodTrace(resolution=res, probes=len(probes), refine_steps=steps, failures=tuple(failures))
    return OptimizationResult("growth", best_alloc, best_val, argmax, trace)


def _biomass_value(net: StreamNetwork, K: float, alloc: Allocation) -> float:
    params = LogisticParams(r=alloc.r, K=K)
    return positive_equilibrium(net, params).biomass


def _move(r: np.ndarray, gain: int, lose: int, amount: float) -> np.ndarray:
    out = r.copy()
    amount = min(amount, out[lose])
    out[lose] -= amount
    out[gain] += amount
    return out


def _ascend_biomass(net, K: float, start: Allocation, start_val: float, r_total: float, resolution: int) -> tuple[Allocation, float, int]:
    # Coordinate-pair ascent: finite-difference slopes pick the transfer
    # direction, then a halving line search along it.
    r = start.values()
    value = start_val
    steps = 0
    n = r.size
    fd = 1e-6 * r_total
    for _ in range(100):
        best_slope = 0.0
        best_pair = None
        for lose in range(n):
            if r[lose] <= 0.0:
                continue
            h = min(fd, r[lose])
            for gain in range(n):
                if gain == lose:
                    continue
                try:
                    probe = _biomass_value(net, K, Allocation.of(_move(r, gain, lose, h)))
                except (ConvergenceError, ValueError):
                    continue
                slope = (probe - value) / h
                if slope > best_slope:
                    best_slope, best_pair = slope, (gain, lose)
        if best_pair is None:
            break
        gain, lose = best_pair
        scale = min(r_total / resolution, r[lose])
        moved = False
        while scale > 1e-12 * r_total:
            cand = Allocation.of(_move(r, gain, lose, scale))
            try:
                cval = _biomass_value(net, K, cand)
            except (ConvergenceError, ValueError):
                cval = -np.inf
            if cval > value:
                r, value = cand.values(), cval
                steps += 1
                moved = True
                break
            scale *= 0.5
        if not moved:
            break
    return Allocation.of(r), value, steps


def maximize_biomass(net: StreamNetwork, r_total: float, K: float, resolution: int = 50, refine: bool = True) -> OptimizationResult:
    """Grid search for the allocation maximizing equilibrium biomass."""
    ensure_valid(net)
    if not r_total > 0:
        raise ValueError("r_total must be positive")
    if net.d == 0.0:
        raise ValueError("biomass optimization requires d > 0")
    res = _effective_resolution(net.n, resolution)
    probes = probe_allocations(net.n, r_total, res)
    values = []
    failures = []
    for alloc in probes:
        try:
            values.append(_biomass_value(net, K, alloc))
        except ConvergenceError as exc:
            failures.append(f"biomass at {alloc.r}: {exc}")
            values.append(-np.inf)
    best_idx = int(np.argmax(values))
    best_alloc, best_val = probes[best_idx], float(values[best_idx])
    steps = 0
    if refine and np.isfinite(best_val):
        refined, rval, steps = _ascend_biomass(net, K, best_alloc, best_val, r_total, res)
        if rval > best_val and refined.r not in {p.r for p in probes}:
            probes = probes + [refined]
            values = values + [rval]
            best_alloc, best_val = refined, rval
    tol = _ARGMAX_REL * abs(best_val)
    argmax = tuple(p for p, v in zip(probes, values) if v >= best_val - tol)
    trace = MethodTrace(resolution=res, probes=len(probes), refine_steps=steps, failures=tuple(failures))
    return OptimizationResult("biomass", best_alloc, best_val, argmax, trace)


@dataclass(frozen=True)
class SmallDCheck:
    d: float
    best: Allocation
    argmax_nodes: tuple[int, ...]
    all_vertices: bool
    at_end_nodes: bool


@dataclass(frozen=True)
class SmallDGrowthReport:
    end_nodes: tuple[int, ...]
    checks: tuple[SmallDCheck, ...]
    passed: bool


def verify_small_d_growth(net: StreamNetwork, q: float, r_total: float, d_values, resolution: int = 50) -> SmallDGrowthReport:
    """Check that for each small d the growth argmax is a vertex at a downstream end node."""
    ends = tuple(sorted(downstream_end_nodes(net)))
    checks = []
    for d in d_values:
        trial = replace(net, d=float(d), q=float(q))
        result = maximize_growth_rate(trial, r_total, resolution, refine=True)
        nodes = []
        vertex_like = True
        for alloc in result.argmax_set:
            arr = alloc.values()
            top = int(np.argmax(arr))
            if arr[top] < r_total * (1 - 1e-9) or arr.sum() - arr[top] > r_total * 1e-9:
                vertex_like = False
            nodes.append(top)
        nodes_t = tuple(sorted(set(nodes)))
        at_ends = vertex_like and all(nd in ends for nd in nodes_t)
        checks.append(SmallDCheck(float(d), result.best_allocation, nodes_t, vertex_like, at_ends))
    return SmallDGrowthReport(ends, tuple(checks), all(c.at_end_nodes for c in checks))


@dataclass(frozen=True)
class PerturbationGain:
    pattern: str
    gain_node: int
    value: float


@dataclass(frozen=True)
class UniformPerturbationReport:
    most_downstream: tuple[int, ...]
    gains: tuple[PerturbationGain, ...]
    passed: bool


def verify_uniform_perturbation(net: StreamNetwork, r_total: float = 1.0) -> UniformPerturbationReport:
    """Check the most-downstream gain dominates for every tested loss pattern.

    Loss patterns: uniform over the other nodes, and all-on-one for each
    possible loss node. Within one pattern, the derivative at a most
    downstream gain node must be at least every other node's derivative.
    """
    ensure_valid(net)
    n = net.n
    if n < 2:
        raise ValueError("perturbation needs at least two nodes")
    down = tuple(sorted(most_downstream_end_nodes(net)))
    gains = []
    passed = True
    patterns: list[tuple[str, dict[int, float]]] = []
    by_gain = {g: first_order_perturbation(net, PerturbationSpec.uniform(g, n), r_total) for g in range(n)}
    patterns.append(("uniform", by_gain))
    for lose in range(n):
        vals = {
            g: first_order_perturbation(net, PerturbationSpec.concentrated(g, lose, n), r_total)
            for g in range(n)
            if g != lose
        }
        patterns.append((f"all-on-{lose + 1}", vals))
    for label, vals in patterns:
        for g, val in sorted(vals.items()):
            gains.append(PerturbationGain(label, g, val))
        down_vals = [v for g, v in vals.items() if g in down]
        other_vals = [v for g, v in vals.items() if g not in down]
        if down_vals and other_vals and min(down_vals) < max(other_vals) - 1e-12:
            passed = False
    return UniformPerturbationReport(down, tuple(gains), passed)


@dataclass(frozen=True)
class BiomassConcentrationReport:
    bound: float
    headwater_count: int
    attained_count: int
    max_off_face: float
    passed: bool
    note: str


def verify_biomass_concentration(net: StreamNetwork, r_total: float, K: float, resolution: int = 50) -> BiomassConcentrationReport:
    """Check the biomass bound is attained exactly on the headwater (level-0) face.

    Every probed allocation supported on level-0 nodes must reach the bound
    within 1e-8; with drift present, every probe holding mass at a positive
    level must fall strictly below. At q = 0 the bound is flat across the
    simplex, so only attainment is checked.
    """
    ensure_valid(net)
    bound = biomass_upper_bound(net, K)
    res = _effective_resolution(net.n, resolution)
    probes = probe_allocations(net.n, r_total, res)
    level0 = [i for i in range(net.n) if net.levels[i] == 0]
    mass_tol = 1e-12 * r_total
    headwater = 0
    attained = 0
    max_off = -np.inf
    ok_face = True
    for alloc in probes:
        arr = alloc.values()
        off_mass = float(arr.sum() - arr[level0].sum())
        try:
            val = _biomass_value(net, K, alloc)
        except ConvergenceError:
            continue
        if off_mass <= mass_tol:
            headwater += 1
            if abs(val - bound) <= 1e-8:
                attained += 1
            else:
                ok_face = False
        else:
            max_off = max(max_off, val)
    if net.q == 0.0:
        passed = ok_face
        note = "q = 0: bound is attained everywhere; off-face strictness not applicable"
    else:
        passed = ok_face and (max_off < bound - 1e-8)
        note = ""
    return BiomassConcentrationReport(bound, headwater, attained, float(max_off), passed, note)

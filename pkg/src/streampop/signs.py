"""Equilibrium sign patterns, edge flows, and admissibility screening.

Each node of a positive equilibrium is classified by the sign of its local
logistic term r_i u_i (1 - u_i / K): '+' for a source (u below capacity),
'-' for a sink (u above capacity), '0' for balance or a zero growth rate.
Flow balance forces structure on these codes, which check_admissibility
screens for, and survey_patterns records which codes actually occur across
the allocation simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Equilibrium, LogisticParams, positive_equilibrium
from .exceptions import ConvergenceError
from .network import StreamNetwork, ensure_valid, oriented_edges
from .optimize import probe_allocations

_RATE_FLOOR_REL = 1e-12
_FLOW_BALANCE_REL = 1e-7

_RULE_SUM = "sum-rule"
_RULE_UPSTREAM = "upstream-minus"
_RULE_DOWNSTREAM = "downstream-plus"

_LETTER = {"+": "P", "-": "M", "0": "Z"}


@dataclass(frozen=True)
class SignPattern:
    symbols: tuple[str, ...]
    tol: float

    def __post_init__(self):
        if any(s not in "+-0" for s in self.symbols):
            raise ValueError("symbols must be '+', '-', or '0'")

    @property
    def code(self) -> str:
        """Letter encoding used in survey CSVs: P for +, M for -, Z for 0."""
        return "".join(_LETTER[s] for s in self.symbols)


def sign_pattern(eq: Equilibrium, params: LogisticParams, tol: float = 1e-7) -> SignPattern:
    """Classify each node of an equilibrium relative to carrying capacity.

    A node counts as balanced when |u_i - K| <= tol * K or when its growth
    rate is below 1e-12 of the total (the logistic term is then pinned near
    zero regardless of u_i).
    """
    u = np.asarray(eq.u_star, dtype=float)
    rates = params.rates()
    if u.size != rates.size:
        raise ValueError("equilibrium and parameters disagree on length")
    floor = _RATE_FLOOR_REL * params.r_total
    band = tol * params.K
    symbols = []
    for i in range(u.size):
        if rates[i] < floor or abs(u[i] - params.K) <= band:
            symbols.append("0")
        elif u[i] < params.K:
            symbols.append("+")
        else:
            symbols.append("-")
    return SignPattern(tuple(symbols), tol)


@dataclass(frozen=True)
class EdgeFlow:
    upstream: int
    downstream: int
    flow_down: float
    flow_up: float
    net: float
    direction: str


@dataclass(frozen=True)
class NetFlowReport:
    flows: tuple[EdgeFlow, ...]
    node_net_inflow: tuple[float, ...]


def net_flows(eq: Equilibrium, net: StreamNetwork) -> NetFlowReport:
    """Directed mass flux on each edge and the resulting per-node net inflow.

    Down an edge (i, j) the flux is (d + q) u_i; back up it is d u_j. An edge
    is 'balanced' when the two cancel to within 1e-7 of their magnitude.
    """
    ensure_valid(net)
    u = np.asarray(eq.u_star, dtype=float)
    if u.size != net.n:
        raise ValueError("equilibrium length does not match network size")
    inflow = [0.0] * net.n
    flows = []
    for up, down in oriented_edges(net):
        f_down = (net.d + net.q) * u[up]
        f_up = net.d * u[down]
        balance = f_down - f_up
        if abs(balance) <= _FLOW_BALANCE_REL * max(f_down, f_up):
            direction = "balanced"
        elif balance > 0:
            direction = "down"
        else:
            direction = "up"
        flows.append(EdgeFlow(up, down, f_down, f_up, balance, direction))
        inflow[down] += balance
        inflow[up] -= balance
    return NetFlowReport(tuple(flows), tuple(inflow))


@dataclass(frozen=True)
class AdmissibilityVerdict:
    pattern: SignPattern
    admissible: bool
    violated_rules: tuple[str, ...]


def check_admissibility(pattern: SignPattern, net: StreamNetwork) -> AdmissibilityVerdict:
    """Screen a sign pattern against the flow-balance constraints.

    sum-rule: a pattern with any nonzero symbol must contain both '+' and '-'
    (weighted local terms cancel in total at equilibrium). upstream-minus: a
    level-0 node cannot be a sink. downstream-plus: a most-downstream node
    cannot be a source.
    """
    ensure_valid(net)
    syms = pattern.symbols
    if len(syms) != net.n:
        raise ValueError("pattern length does not match network size")
    violated = []
    if any(s != "0" for s in syms) and not ("+" in syms and "-" in syms):
        violated.append(_RULE_SUM)
    top = max(net.levels)
    if any(syms[i] == "-" for i in range(net.n) if net.levels[i] == 0):
        violated.append(_RULE_UPSTREAM)
    if any(syms[i] == "+" for i in range(net.n) if net.levels[i] == top):
        violated.append(_RULE_DOWNSTREAM)
    return AdmissibilityVerdict(pattern, not violated, tuple(violated))


@dataclass(frozen=True)
class SurveyRow:
    allocation: tuple[float, ...]
    u_star: tuple[float, ...]
    code: str


@dataclass(frozen=True)
class SurveyResult:
    patterns: tuple[SignPattern, ...]
    rows: tuple[SurveyRow, ...]
    failures: tuple[str, ...]

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(p.code for p in self.patterns)


def survey_patterns(net: StreamNetwork, params_base: LogisticParams, grid_resolution: int) -> SurveyResult:
    """Solve the equilibrium across the allocation simplex and collect sign codes.

    The probe set is the simplex lattice plus vertices and edge midpoints;
    the total rate and capacity come from params_base. Equilibria that fail
    to converge are recorded, not raised.
    """
    ensure_valid(net)
    if params_base.n != net.n:
        raise ValueError("params_base length does not match network size")
    rows = []
    failures = []
    seen: dict[str, SignPattern] = {}
    for alloc in probe_allocations(net.n, params_base.r_total, grid_resolution):
        params = LogisticParams(r=alloc.r, K=params_base.K)
        try:
            eq = positive_equilibrium(net, params)
        except ConvergenceError as exc:
            failures.append(f"equilibrium at {alloc.r}: {exc}")
            continue
        pat = sign_pattern(eq, params)
        rows.append(SurveyRow(alloc.r, tuple(float(x) for x in eq.u_star), pat.code))
        seen.setdefault(pat.code, pat)
    patterns = tuple(seen[c] for c in sorted(seen))
    return SurveyResult(patterns, tuple(rows), tuple(failures))

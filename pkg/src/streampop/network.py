"""Leveled stream-network graphs and their movement matrices.

Nodes are stream sections indexed 0..n-1. An integer level encodes position
along the flow: level 0 is the most upstream, larger levels lie further
downstream. Edges join nodes on consecutive levels only and carry movement in
both directions, at rate d + q downstream (diffusion plus drift) and d
upstream (diffusion only).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .exceptions import InvalidNetworkError

# Structural aliases: a node is its index, a level function is the per-node
# level tuple.
NodeId = int
LevelFunction = tuple[int, ...]

ENUMERATION_MAX_NODES = 7


@dataclass(frozen=True)
class StreamNetwork:
    """A leveled graph with homogeneous two-way movement rates.

    `levels[i]` is the level of node i. `edges` holds unordered node pairs;
    the downstream orientation of each edge is derived from the levels, so a
    one-way configuration is unrepresentable. Construction checks only cheap
    local properties (index ranges, finite nonnegative rates); structural
    validity is the job of :func:`validate`.
    """

    levels: tuple[int, ...]
    edges: frozenset[tuple[int, int]]
    d: float
    q: float

    def __post_init__(self):
        levels = tuple(int(l) for l in self.levels)
        object.__setattr__(self, "levels", levels)
        n = len(levels)
        if n < 1:
            raise ValueError("network needs at least one node")
        if any(l < 0 for l in levels):
            raise ValueError("levels must be nonnegative")
        norm = set()
        for pair in self.edges:
            i, j = (int(x) for x in pair)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))
        for name in ("d", "q"):
            rate = float(getattr(self, name))
            if not np.isfinite(rate) or rate < 0:
                raise ValueError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, rate)

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def max_level(self) -> int:
        return max(self.levels)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbors(self) -> list[list[int]]:
        """Adjacency lists, each sorted ascending."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.sorted_edges():
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(a) for a in adj]


@dataclass(frozen=True)
class ConnectionMatrix:
    """Movement-rate matrix L = d*D + q*Q of a stream network.

    Column j holds the rates out of node j: the off-diagonal entry (i, j) is
    the movement rate from j to i and the diagonal entry is the negated column
    sum, so ones @ L == 0. D is the symmetric unit diffusion pattern and Q the
    downstream-only unit drift pattern.
    """

    matrix: np.ndarray
    diffusion: np.ndarray
    drift: np.ndarray
    network: StreamNetwork

    def __post_init__(self):
        for arr in (self.matrix, self.diffusion, self.drift):
            arr.setflags(write=False)


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[str, ...]
    notes: tuple[str, ...]


_THREE_NODE = {
    "tributary": ((0, 0, 1), ((0, 2), (1, 2))),
    "straight": ((0, 1, 2), ((0, 1), (1, 2))),
    "distributary": ((0, 1, 1), ((0, 1), (0, 2))),
}


def canonical_three_node(kind: str, d: float, q: float) -> StreamNetwork:
    """One of the three-node reference configurations.

    tributary: two headwater nodes joining at node 3; straight: a chain;
    distributary: one headwater splitting into nodes 2 and 3.
    """
    if kind not in _THREE_NODE:
        raise ValueError(f"unknown kind {kind!r}; expected one of {sorted(_THREE_NODE)}")
    levels, edges = _THREE_NODE[kind]
    return StreamNetwork(levels, frozenset(edges), d, q)


def straight_chain(n: int, d: float, q: float) -> StreamNetwork:
    """A chain of n nodes with level i at position i."""
    if n < 1:
        raise ValueError("chain needs at least one node")
    levels = tuple(range(n))
    edges = frozenset((i, i + 1) for i in range(n - 1))
    return StreamNetwork(levels, edges, d, q)


def _reachable(n: int, arcs: list[list[int]]) -> bool:
    seen = [False] * n
    seen[0] = True
    stack = [0]
    while stack:
        i = stack.pop()
        for j in arcs[i]:
            if not seen[j]:
                seen[j] = True
                stack.append(j)
    return all(seen)


def _strongly_connected(n: int, arcs: list[tuple[int, int]]) -> bool:
    # Strongly connected iff node 0 reaches every node in the digraph and in
    # its reverse.
    fwd: list[list[int]] = [[] for _ in range(n)]
    rev: list[list[int]] = [[] for _ in range(n)]
    for i, j in arcs:
        fwd[i].append(j)
        rev[j].append(i)
    return _reachable(n, fwd) and _reachable(n, rev)


def validate(net: StreamNetwork) -> ValidationReport:
    """Check the leveled-graph clauses; reports violations, never raises."""
    violations: list[str] = []
    notes: list[str] = []
    n = net.n

    occupied = set(net.levels)
    missing = sorted(set(range(net.max_level + 1)) - occupied)
    if missing:
        violations.append(f"level-contiguity: unoccupied levels {missing}")

    skew = sorted(
        (i, j) for i, j in net.edges if abs(net.levels[i] - net.levels[j]) != 1
    )
    if skew:
        violations.append(f"edge-level-adjacency: non-consecutive-level edges {skew}")

    if n > 1:
        arcs = []
        for i, j in net.edges:
            if abs(net.levels[i] - net.levels[j]) != 1:
                continue  # unorientable edge, already reported
            up, down = (i, j) if net.levels[i] < net.levels[j] else (j, i)
            if net.d + net.q > 0:
                arcs.append((up, down))
            if net.d > 0:
                arcs.append((down, up))
        if net.d > 0:
            if not _strongly_connected(n, arcs):
                violations.append("strong-connectivity: induced digraph is not strongly connected")
        else:
            # d = 0 drops every upstream arc; treat the undirected skeleton as
            # the connectivity requirement and flag the analytic limit.
            und = [(i, j) for i, j in arcs] + [(j, i) for i, j in arcs]
            fwd: list[list[int]] = [[] for _ in range(n)]
            for a, b in und:
                fwd[a].append(b)
            if not net.edges or not _reachable(n, fwd):
                violations.append("strong-connectivity: graph is disconnected")
            else:
                notes.append("irreducible only for d > 0")

    return ValidationReport(valid=not violations, violations=tuple(violations), notes=tuple(notes))


def ensure_valid(net: StreamNetwork) -> None:
    report = validate(net)
    if not report.valid:
        raise InvalidNetworkError("; ".join(report.violations))


def oriented_edges(net: StreamNetwork) -> list[tuple[int, int]]:
    """Edges as (upstream, downstream) pairs, sorted."""
    out = []
    for i, j in net.sorted_edges():
        if abs(net.levels[i] - net.levels[j]) != 1:
            raise InvalidNetworkError(f"edge ({i}, {j}) does not join consecutive levels")
        out.append((i, j) if net.levels[i] < net.levels[j] else (j, i))
    return sorted(out)


def build_connection_matrix(net: StreamNetwork) -> ConnectionMatrix:
    """Assemble the movement matrix of a valid network.

    Each diagonal entry is the negated ordered sum of its column's
    off-diagonal weights, so column sums vanish to machine precision.
    """
    ensure_valid(net)
    n, d, q = net.n, net.d, net.q
    L = np.zeros((n, n))
    D = np.zeros((n, n))
    Q = np.zeros((n, n))
    adj = net.neighbors()
    for i in range(n):
        weights = []
        down_count = 0
        for j in adj[i]:
            goes_down = net.levels[j] == net.levels[i] + 1
            w = d + q if goes_down else d
            L[j, i] = w
            D[j, i] = 1.0
            if goes_down:
                Q[j, i] = 1.0
                down_count += 1
            weights.append(w)
        L[i, i] = -sum(weights, 0.0)
        D[i, i] = -float(len(weights))
        Q[i, i] = -float(down_count)
    return ConnectionMatrix(matrix=L, diffusion=D, drift=Q, network=net)


def downstream_end_nodes(net: StreamNetwork) -> frozenset[int]:
    """Nodes with no neighbor one level further downstream."""
    ensure_valid(net)
    adj = net.neighbors()
    return frozenset(
        i
        for i in range(net.n)
        if not any(net.levels[j] == net.levels[i] + 1 for j in adj[i])
    )


def most_downstream_end_nodes(net: StreamNetwork) -> frozenset[int]:
    """The downstream end nodes that sit on the maximum level."""
    top = net.max_level
    return frozenset(i for i in downstream_end_nodes(net) if net.levels[i] == top)


def downstream_neighbor_counts(net: StreamNetwork) -> tuple[int, ...]:
    """Per node, the number of adjacent nodes one level further downstream."""
    adj = net.neighbors()
    return tuple(
        sum(1 for j in adj[i] if net.levels[j] == net.levels[i] + 1)
        for i in range(net.n)
    )


def find_level_function(n: int, edges) -> tuple[int, ...] | None:
    """Search for a level assignment making (nodes, edges) a leveled graph.

    Works on connected graphs; returns a valid level tuple or None when no
    assignment satisfies the consecutive-level and contiguity requirements
    (for example any graph containing an odd cycle).
    """
    pairs = {(min(int(i), int(j)), max(int(i), int(j))) for i, j in edges}
    for i, j in pairs:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"bad edge ({i}, {j})")
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in sorted(pairs):
        adj[i].append(j)
        adj[j].append(i)
    if n > 1 and not _reachable(n, adj):
        raise ValueError("graph must be connected")

    order: list[int] = [0]
    seen = {0}
    for i in order:
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                order.append(j)

    assign: dict[int, int] = {}

    def extend(k: int) -> tuple[int, ...] | None:
        if k == len(order):
            lo = min(assign.values())
            levels = tuple(assign[i] - lo for i in range(n))
            if set(levels) == set(range(max(levels) + 1)):
                return levels
            return None
        node = order[k]
        options: set[int] | None = None
        for nb in adj[node]:
            if nb in assign:
                cand = {assign[nb] - 1, assign[nb] + 1}
                options = cand if options is None else options & cand
        if options is None:
            options = {0}
        for lev in sorted(options):
            assign[node] = lev
            found = extend(k + 1)
            if found is not None:
                return found
            del assign[node]
        return None

    return extend(0)


def _compositions(n: int):
    for k in range(1, n + 1):
        for cuts in itertools.combinations(range(1, n), k - 1):
            bounds = (0,) + cuts + (n,)
            yield tuple(bounds[i + 1] - bounds[i] for i in range(k))


@lru_cache(maxsize=None)
def _level_relabelings(parts: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    # All node relabelings that permute nodes only within their level block.
    blocks = []
    start = 0
    for size in parts:
        blocks.append(tuple(range(start, start + size)))
        start += size
    out = []
    for combo in itertools.product(*(itertools.permutations(b) for b in blocks)):
        mapping = [0] * start
        for block, perm in zip(blocks, combo):
            for src, dst in zip(block, perm):
                mapping[src] = dst
        out.append(tuple(mapping))
    return tuple(out)


def _canonical_edges(parts: tuple[int, ...], edges) -> tuple[tuple[int, int], ...]:
    best = None
    for mapping in _level_relabelings(parts):
        relabeled = tuple(
            sorted(
                (mapping[i], mapping[j]) if mapping[i] < mapping[j] else (mapping[j], mapping[i])
                for i, j in edges
            )
        )
        if best is None or relabeled < best:
            best = relabeled
    return best if best is not None else ()


def _connected(n: int, edges) -> bool:
    if n == 1:
        return True
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    return _reachable(n, adj)


def enumerate_homogeneous_networks(n: int, d: float = 1.0, q: float = 1.0) -> list[StreamNetwork]:
    """All homogeneous flow stream networks on n nodes, up to within-level relabeling.

    A network here is a (graph, level function) pair; two count as the same
    exactly when some permutation of nodes preserving every level maps one
    edge set onto the other. Distinct level assignments of one graph are
    distinct networks unless such a permutation relates them. Results are
    labeled level-major and returned in a deterministic sorted order.
    """
    if not 1 <= n <= ENUMERATION_MAX_NODES:
        raise ValueError(f"n must be in 1..{ENUMERATION_MAX_NODES}")
    found: list[tuple[tuple, StreamNetwork]] = []
    seen = set()
    for parts in _compositions(n):
        levels = tuple(lev for lev, size in enumerate(parts) for _ in range(size))
        blocks = []
        start = 0
        for size in parts:
            blocks.append(range(start, start + size))
            start += size
        layer_options = []
        for upper, lower in zip(blocks, blocks[1:]):
            pairs = list(itertools.product(upper, lower))
            # an empty layer disconnects the level blocks, so skip mask 0
            options = []
            for mask in range(1, 1 << len(pairs)):
                options.append(tuple(p for b, p in enumerate(pairs) if mask >> b & 1))
            layer_options.append(options)
        for combo in itertools.product(*layer_options):
            edges = [e for layer in combo for e in layer]
            if n > 1:
                deg = [0] * n
                for i, j in edges:
                    deg[i] += 1
                    deg[j] += 1
                if any(dg == 0 for dg in deg):
                    continue
                if not _connected(n, edges):
                    continue
            key = (parts, _canonical_edges(parts, edges))
            if key in seen:
                continue
            seen.add(key)
            found.append((key, StreamNetwork(levels, frozenset(edges), d, q)))
    found.sort(key=lambda item: item[0])
    return [net for _, net in found]


def network_to_json(net: StreamNetwork) -> str:
    """Network document text: n, levels, 1-based [upstream, downstream] edges, d, q."""
    doc = {
        "n": net.n,
        "levels": list(net.levels),
        "edges": [[u + 1, v + 1] for u, v in oriented_edges(net)],
        "d": net.d,
        "q": net.q,
    }
    return json.dumps(doc, indent=2) + "\n"


def write_network(net: StreamNetwork, path) -> None:
    Path(path).write_text(network_to_json(net), encoding="utf-8")


def read_network(path) -> StreamNetwork:
    """Parse a network document; raises ValueError on malformed content."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("network document must be a JSON object")
    try:
        n = int(data["n"])
        levels = [int(l) for l in data["levels"]]
        raw_edges = [(int(i), int(j)) for i, j in data["edges"]]
        d = float(data["d"])
        q = float(data["q"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed network document: {exc}") from exc
    if len(levels) != n:
        raise ValueError(f"levels has {len(levels)} entries, expected n={n}")
    for i, j in raw_edges:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"edge [{i}, {j}] out of 1..{n}")
    edges = frozenset((i - 1, j - 1) for i, j in raw_edges)
    return StreamNetwork(tuple(levels), edges, d, q)

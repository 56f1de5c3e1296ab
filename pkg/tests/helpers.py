"""Shared test oracles, independent of the implementation under test.

Eigen oracles go through numpy's dense QR-based solvers; the enumeration
oracle brute-forces every labeled (levels, edges) pair and canonicalizes
over all node relabelings. The random generator rejection-samples valid
networks so tests can sweep sizes and rate regimes.
"""

from __future__ import annotations

import itertools
from collections import deque

import numpy as np

from streampop import StreamNetwork, validate


def random_homogeneous_network(
    rng: np.random.Generator,
    n_max: int = 10,
    n_min: int = 2,
    d_range: tuple[float, float] = (0.05, 2.0),
    q_range: tuple[float, float] = (0.0, 2.0),
    q_cap_at_d: bool = False,
) -> StreamNetwork:
    for _ in range(300):
        n = int(rng.integers(n_min, n_max + 1))
        d = float(rng.uniform(*d_range))
        q = float(rng.uniform(*q_range))
        if q_cap_at_d:
            q = float(rng.uniform(0.0, d))
        if n == 1:
            return StreamNetwork((0,), frozenset(), d, q)
        k = int(rng.integers(2, n + 1))
        cuts = sorted(rng.choice(np.arange(1, n), size=k - 1, replace=False).tolist())
        bounds = [0, *cuts, n]
        layers = [list(range(bounds[i], bounds[i + 1])) for i in range(k)]
        edges = set()
        for lv in range(1, k):
            for node in layers[lv]:
                edges.add((int(rng.choice(layers[lv - 1])), node))
        for lv in range(k - 1):
            for node in layers[lv]:
                if not any(node in e for e in edges):
                    edges.add((node, int(rng.choice(layers[lv + 1]))))
        for lv in range(k - 1):
            for a in layers[lv]:
                for b in layers[lv + 1]:
                    if rng.random() < 0.2:
                        edges.add((a, b))
        levels = [0] * n
        for lv, members in enumerate(layers):
            for m in members:
                levels[m] = lv
        perm = rng.permutation(n)
        plevels = [0] * n
        for i in range(n):
            plevels[int(perm[i])] = levels[i]
        pedges = frozenset((int(perm[a]), int(perm[b])) for a, b in edges)
        net = StreamNetwork(tuple(plevels), pedges, d, q)
        if validate(net).valid:
            return net
    raise AssertionError("random network generation kept producing invalid graphs")


def spectral_bound_oracle(mat: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(mat).real))


def perron_right_oracle(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(mat)
    idx = int(np.argmax(vals.real))
    v = vecs[:, idx].real
    if v.sum() < 0:
        v = -v
    return v / v.sum()


def null_vector_oracle(mat: np.ndarray) -> np.ndarray:
    # Right null vector via SVD, normalized to a positive sum-1 vector.
    _, _, vt = np.linalg.svd(mat)
    v = vt[-1]
    if v.sum() < 0:
        v = -v
    return v / v.sum()


def _connected(n: int, edges: frozenset) -> bool:
    if n == 1:
        return True
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {0}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen) == n


def _valid_pair(n: int, levels: tuple[int, ...], edges: frozenset) -> bool:
    if n > 1:
        touched = {x for e in edges for x in e}
        if touched != set(range(n)):
            return False
    return _connected(n, edges)


def _canonical_key(n: int, levels: tuple[int, ...], edges: frozenset):
    best = None
    for perm in itertools.permutations(range(n)):
        plv = [0] * n
        for i in range(n):
            plv[perm[i]] = levels[i]
        pedges = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        key = (tuple(plv), pedges)
        if best is None or key < best:
            best = key
    return best


def brute_force_network_count(n: int) -> int:
    """Count homogeneous networks on n nodes by exhausting labeled pairs."""
    seen = set()
    for levels in itertools.product(range(n), repeat=n):
        top = max(levels)
        if set(levels) != set(range(top + 1)):
            continue
        cand = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if abs(levels[i] - levels[j]) == 1
        ]
        for mask in range(1 << len(cand)):
            edges = frozenset(cand[k] for k in range(len(cand)) if mask >> k & 1)
            if not _valid_pair(n, levels, edges):
                continue
            seen.add(_canonical_key(n, levels, edges))
    return len(seen)

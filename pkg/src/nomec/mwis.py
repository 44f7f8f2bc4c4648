"""Search for minimum-total-weight maximal independent sets.

The schedule quality target is the maximal independent set whose total
weight is smallest, so the greedy heuristic repeatedly takes the lightest
surviving vertex and deletes its neighborhood. An exact enumerator (for
small graphs) and a seeded random maximal set provide the quality bounds.
"""

from dataclasses import dataclass

import numpy as np

from .graph import ConflictGraph, modified_weight


@dataclass(frozen=True)
class IndependentSet:
    vertices: tuple      # NomaAssociation objects
    indices: tuple       # positions in the source graph
    total_weight: float


def _tie_key(graph: ConflictGraph, i: int):
    # singletons carry u2 = -1 and so order before pairs with the same u1,
    # matching tuple comparison on (ap, rrb, uds)
    return (graph.ap_arr[i], graph.rrb_arr[i], graph.u1[i], graph.u2[i])


def _ordered(graph: ConflictGraph, rank) -> np.ndarray:
    """Vertex order by (rank, ap, rrb, uds); lexsort keys run minor-first."""
    return np.lexsort((graph.u2, graph.u1, graph.rrb_arr, graph.ap_arr,
                       np.asarray(rank, dtype=float)))


def _collect(graph: ConflictGraph, picked) -> IndependentSet:
    picked = tuple(int(i) for i in picked)
    verts = tuple(graph.vertex(i) for i in picked)
    total = float(sum(graph.weights[i] for i in picked))
    return IndependentSet(verts, picked, total)


def _greedy_by_order(graph: ConflictGraph, order) -> IndependentSet:
    """Maximal independent set taking vertices in the given order."""
    n = len(graph)
    alive = np.ones(n, dtype=bool)
    picked = []
    for i in order:
        if alive[i]:
            picked.append(i)
            alive &= ~graph.neighbor_mask(i)
            alive[i] = False
    return _collect(graph, picked)


def greedy_min_wis(graph: ConflictGraph, ordering: str = "original") -> IndependentSet:
    """Greedy lightest-first maximal independent set.

    ordering "original" ranks by the vertex weight, "modified" by the
    weight scaled by the total non-neighbor weight; ties break on
    (ap, rrb, lowest ud id). total_weight always sums the plain weights.
    """
    if ordering not in ("original", "modified"):
        raise ValueError(f"unknown ordering {ordering!r}")
    n = len(graph)
    if n == 0:
        return IndependentSet((), (), 0.0)
    if ordering == "modified":
        rank = [modified_weight(i, graph) for i in range(n)]
    else:
        rank = graph.weights
    return _greedy_by_order(graph, _ordered(graph, rank))


def random_maximal_is(graph: ConflictGraph, seed: int) -> IndependentSet:
    """Maximal independent set grown in a seeded random vertex order."""
    n = len(graph)
    if n == 0:
        return IndependentSet((), (), 0.0)
    rng = np.random.default_rng(seed)
    return _greedy_by_order(graph, rng.permutation(n))


_EXACT_LIMIT = 25


def exact_min_wis(graph: ConflictGraph) -> IndependentSet:
    """Exhaustive minimum-weight maximal independent set, at most 25 vertices.

    Maximal independent sets of the graph are the maximal cliques of its
    complement, enumerated Bron-Kerbosch style over int bitmasks.
    """
    n = len(graph)
    if n > _EXACT_LIMIT:
        raise ValueError(f"exact search limited to {_EXACT_LIMIT} vertices, got {n}")
    if n == 0:
        return IndependentSet((), (), 0.0)
    adj = graph.adjacency_matrix()
    full = (1 << n) - 1
    comp = []
    for i in range(n):
        mask = 0
        for j in range(n):
            if j != i and not adj[i, j]:
                mask |= 1 << j
        comp.append(mask)
    weights = graph.weights
    best = None  # (total_weight, sorted index tuple)

    def bits(mask):
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def bk(r_mask, p_mask, x_mask):
        nonlocal best
        if p_mask == 0 and x_mask == 0:
            members = tuple(bits(r_mask))
            cand = (float(sum(weights[i] for i in members)), members)
            if best is None or cand < best:
                best = cand
            return
        pivot = max(bits(p_mask | x_mask), key=lambda u: bin(p_mask & comp[u]).count("1"))
        for v in bits(p_mask & ~comp[pivot]):
            bk(r_mask | (1 << v), p_mask & comp[v], x_mask & comp[v])
            p_mask &= ~(1 << v)
            x_mask |= 1 << v

    bk(0, full, 0)
    return _collect(graph, best[1])


def is_independent(graph: ConflictGraph, indices) -> bool:
    idx = list(indices)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            if graph.adjacent(idx[a], idx[b]):
                return False
    return True


def is_maximal(graph: ConflictGraph, indices) -> bool:
    """No surviving vertex could still be added."""
    n = len(graph)
    alive = np.ones(n, dtype=bool)
    for i in indices:
        alive &= ~graph.neighbor_mask(i)
        alive[i] = False
    return not alive.any()

"""Degree-preserving randomization that keeps single and mutual edges apart."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .census import DirectedGraph, _as_adj


@njit(cache=True, nogil=True)
def _split_edges(adj):
    n = adj.shape[0]
    ns = 0
    nm = 0
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                if adj[j, i]:
                    if i < j:
                        nm += 1
                else:
                    ns += 1
    singles = np.empty((ns, 2), dtype=np.int64)
    mutuals = np.empty((nm, 2), dtype=np.int64)
    ns = 0
    nm = 0
    for i in range(n):
        for j in range(n):
            if adj[i, j]:
                if adj[j, i]:
                    if i < j:
                        mutuals[nm, 0] = i
                        mutuals[nm, 1] = j
                        nm += 1
                else:
                    singles[ns, 0] = i
                    singles[ns, 1] = j
                    ns += 1
    return singles, mutuals


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _next(state):
    """splitmix64 step; ``state`` is a one-element uint64 array."""
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _below(state, n):
    """Uniform integer in [0, n) for 0 < n < 2**32."""
    return np.int64(((_next(state) >> np.uint64(32)) * np.uint64(n)) >> np.uint64(32))


@njit(cache=True, nogil=True)
def _shuffle(state, x):
    for i in range(x.shape[0] - 1, 0, -1):
        j = _below(state, i + 1)
        x[i], x[j] = x[j], x[i]


@njit(cache=True, nogil=True)
def _linked(adj, a, b):
    return adj[a, b] != 0 or adj[b, a] != 0


@njit(cache=True, nogil=True)
def _swap_in_place(adj, singles, mutuals, swaps_per_edge, state):
    """Run the swap chain on ``adj`` drawing from ``state``; returns accepted swaps."""
    accepted = 0
    ns = singles.shape[0]
    if ns >= 2:
        for _ in range(swaps_per_edge * ns):
            e = _below(state, ns)
            f = _below(state, ns)
            if e == f:
                continue
            a, b = singles[e, 0], singles[e, 1]
            c, d = singles[f, 0], singles[f, 1]
            # a->b, c->d  becomes  a->d, c->b
            if a == d or c == b or a == c or b == d:
                continue
            if _linked(adj, a, d) or _linked(adj, c, b):
                continue
            adj[a, b] = 0
            adj[c, d] = 0
            adj[a, d] = 1
            adj[c, b] = 1
            singles[e, 1] = d
            singles[f, 1] = b
            accepted += 1
    nm = mutuals.shape[0]
    if nm >= 2:
        for _ in range(swaps_per_edge * nm):
            e = _below(state, nm)
            f = _below(state, nm)
            if e == f:
                continue
            a, b = mutuals[e, 0], mutuals[e, 1]
            if _below(state, 2) == 1:
                c, d = mutuals[f, 1], mutuals[f, 0]
            else:
                c, d = mutuals[f, 0], mutuals[f, 1]
            # a<->b, c<->d  becomes  a<->d, c<->b
            if a == d or c == b or a == c or b == d:
                continue
            if _linked(adj, a, d) or _linked(adj, c, b):
                continue
            adj[a, b] = 0
            adj[b, a] = 0
            adj[c, d] = 0
            adj[d, c] = 0
            adj[a, d] = 1
            adj[d, a] = 1
            adj[c, b] = 1
            adj[b, c] = 1
            mutuals[e, 1] = d
            mutuals[f, 0] = c
            mutuals[f, 1] = b
            accepted += 1
    return accepted


@njit(cache=True, nogil=True)
def _randomize(adj, swaps_per_edge, seed):
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    out = adj.copy()
    singles, mutuals = _split_edges(out)
    accepted = _swap_in_place(out, singles, mutuals, swaps_per_edge, state)
    return out, accepted


@dataclass(frozen=True)
class NullSample:
    graph: DirectedGraph
    unchanged: bool  # True when no swap was possible or accepted
    accepted_swaps: int


def replica_seeds(seed, n: int) -> np.ndarray:
    """Independent per-replica seeds derived from (seed, replica index)."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.generate_state(n, dtype=np.uint64)


def randomize_degree_preserving(g, swaps_per_edge: int = 10, seed=0) -> NullSample:
    """Double-edge swaps within the single-edge and mutual-pair classes.

    Swaps that would create a self-loop, a duplicate edge or any link
    between already-linked nodes are rejected, so every node keeps its
    (single-in, single-out, mutual) degree triple.
    """
    adj = _as_adj(g)
    s = replica_seeds(seed, 1)[0]
    out, accepted = _randomize(adj, int(swaps_per_edge), s)
    return NullSample(DirectedGraph.from_adjacency(out), accepted == 0, int(accepted))

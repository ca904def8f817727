"""Triad and orbit census over directed graphs (numba kernels)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from numba import njit

from .triads import (
    CODE_CANON_PERMS,
    CODE_CLASS,
    CODE_N_CANON,
    CODE_NODE_ORBIT,
    MILO_IDS,
    N_CLASSES,
    N_ORBITS,
)


@dataclass(frozen=True)
class DirectedGraph:
    """Simple directed graph on nodes 0..n-1 without self-loops."""

    n: int
    edges: frozenset

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError("edge endpoint out of range")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "DirectedGraph":
        return cls(int(n), frozenset((int(i), int(j)) for i, j in edges))

    @classmethod
    def from_adjacency(cls, A) -> "DirectedGraph":
        A = np.asarray(A)
        src, dst = np.nonzero(A)
        return cls.from_edges(len(A), ((i, j) for i, j in zip(src, dst) if i != j))

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=np.uint8)
        for i, j in self.edges:
            A[i, j] = 1
        return A

    def __len__(self) -> int:
        return len(self.edges)

    def degree_triples(self) -> np.ndarray:
        """Rows (single in, single out, mutual) per node."""
        A = self.adjacency().astype(np.int64)
        mutual = A & A.T
        single = A - mutual
        return np.column_stack([single.sum(axis=0), single.sum(axis=1), mutual.sum(axis=1)])


class ColoredTriadKey(NamedTuple):
    milo_id: int
    colors: tuple


@dataclass(frozen=True)
class TriadCensus:
    counts: np.ndarray  # (13,) in MILO_IDS order
    orbit_counts: np.ndarray  # (n, 30)

    def as_dict(self) -> dict[int, int]:
        return {m: int(c) for m, c in zip(MILO_IDS, self.counts)}


@njit(cache=True, nogil=True)
def _triad_code(adj, a, b, c):
    return (adj[a, b] | (adj[a, c] << 1) | (adj[b, a] << 2) | (adj[b, c] << 3)
            | (adj[c, a] << 4) | (adj[c, b] << 5))


@njit(cache=True, nogil=True)
def _census_kernel(adj, code_class, node_orbit, want_orbits, counts, orbits):
    n = adj.shape[0]
    for v in range(n):
        for u in range(v + 1, n):
            if adj[v, u] == 0 and adj[u, v] == 0:
                continue
            for w in range(v + 1, n):
                if w == u:
                    continue
                if adj[w, u] == 0 and adj[u, w] == 0 and adj[w, v] == 0 and adj[v, w] == 0:
                    continue
                if w < u and (adj[v, w] != 0 or adj[w, v] != 0):
                    continue
                code = _triad_code(adj, v, u, w)
                c = code_class[code]
                counts[c] += 1
                if want_orbits:
                    orbits[v, node_orbit[code, 0]] += 1
                    orbits[u, node_orbit[code, 1]] += 1
                    orbits[w, node_orbit[code, 2]] += 1


@njit(cache=True, nogil=True)
def _colored_kernel(adj, colors, K, code_class, canon_perms, n_canon, counts, touched, n_touched):
    """Accumulate colored keys class*K^3 + c0*K^2 + c1*K + c2; returns touched count."""
    n = adj.shape[0]
    K3 = K * K * K
    for v in range(n):
        for u in range(v + 1, n):
            if adj[v, u] == 0 and adj[u, v] == 0:
                continue
            for w in range(v + 1, n):
                if w == u:
                    continue
                if adj[w, u] == 0 and adj[u, w] == 0 and adj[w, v] == 0 and adj[v, w] == 0:
                    continue
                if w < u and (adj[v, w] != 0 or adj[w, v] != 0):
                    continue
                code = _triad_code(adj, v, u, w)
                best = -1
                for r in range(n_canon[code]):
                    key = 0
                    for q in range(3):
                        node = canon_perms[code, r, q]
                        x = v if node == 0 else (u if node == 1 else w)
                        key = key * K + colors[x]
                    if best < 0 or key < best:
                        best = key
                idx = code_class[code] * K3 + best
                if counts[idx] == 0:
                    touched[n_touched] = idx
                    n_touched += 1
                counts[idx] += 1
    return n_touched


def _as_adj(g) -> np.ndarray:
    if isinstance(g, DirectedGraph):
        return g.adjacency()
    A = (np.asarray(g) != 0).astype(np.uint8)
    np.fill_diagonal(A, 0)
    return np.ascontiguousarray(A)


def triad_census(g, orbits: bool = True) -> TriadCensus:
    """13-class triad census and per-node 30-orbit counts of a directed graph.

    Only weakly connected triples are enumerated, by iterating each
    adjacent pair and the union of its neighbourhoods.
    """
    adj = _as_adj(g)
    n = adj.shape[0]
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    orb = np.zeros((n, N_ORBITS), dtype=np.int64)
    _census_kernel(adj, CODE_CLASS, CODE_NODE_ORBIT, orbits, counts, orb)
    return TriadCensus(counts, orb)


def encode_coloring(coloring: Sequence | Mapping, n: int, palette: Sequence | None = None):
    """Map node colours to integer codes 0..K-1 (sorted palette unless given)."""
    if isinstance(coloring, Mapping):
        missing = [i for i in range(n) if i not in coloring]
        if missing:
            raise ValueError(f"uncolored node {missing[0]}")
        labels = [coloring[i] for i in range(n)]
    else:
        labels = list(coloring)
        if len(labels) != n or any(c is None for c in labels):
            raise ValueError("uncolored node")
    palette = tuple(sorted(set(labels))) if palette is None else tuple(palette)
    lookup = {c: k for k, c in enumerate(palette)}
    try:
        codes = np.array([lookup[c] for c in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"colour {exc.args[0]!r} not in palette") from None
    return codes, palette


def decode_key(index: int, palette: Sequence) -> ColoredTriadKey:
    K = len(palette)
    c, rest = divmod(index, K * K * K)
    hi, lo = divmod(rest, K)
    cols = (hi // K, hi % K, lo)
    return ColoredTriadKey(MILO_IDS[c], tuple(palette[x] for x in cols))


def colored_counts_array(adj: np.ndarray, codes: np.ndarray, K: int) -> np.ndarray:
    counts = np.zeros(N_CLASSES * K**3, dtype=np.int64)
    touched = np.zeros(counts.size, dtype=np.int64)
    _colored_kernel(adj, codes, K, CODE_CLASS, CODE_CANON_PERMS, CODE_N_CANON, counts, touched, 0)
    return counts


def colored_census(g, coloring, scheme: int | None = None, palette=None) -> dict[ColoredTriadKey, int]:
    """Counts of canonical coloured triads.

    ``coloring`` gives a colour per node (sequence or node -> colour map).
    ``scheme`` is informational (2/4/7-class partitions produce colourings
    with that many labels at most). Keys carry the colours read off the
    class's canonical positions, minimised over its automorphisms.
    """
    adj = _as_adj(g)
    codes, palette = encode_coloring(coloring, adj.shape[0], palette)
    counts = colored_counts_array(adj, codes, len(palette))
    return {decode_key(i, palette): int(counts[i]) for i in np.flatnonzero(counts)}


def brute_force_census(g) -> TriadCensus:
    """Reference census over all C(n, 3) triples (slow, for verification)."""
    adj = _as_adj(g)
    n = adj.shape[0]
    counts = np.zeros(N_CLASSES, dtype=np.int64)
    orb = np.zeros((n, N_ORBITS), dtype=np.int64)
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                code = int(_triad_code(adj, a, b, c))
                k = CODE_CLASS[code]
                if k < 0:
                    continue
                counts[k] += 1
                for node, o in zip((a, b, c), CODE_NODE_ORBIT[code]):
                    orb[node, o] += 1
    return TriadCensus(counts, orb)

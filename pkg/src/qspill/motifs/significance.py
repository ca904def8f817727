"""Randomization z-scores for triad and coloured-triad counts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numba import njit

from .census import (
    ColoredTriadKey,
    _as_adj,
    _triad_code,
    colored_counts_array,
    decode_key,
    encode_coloring,
    triad_census,
)
from .nullmodel import _shuffle, _split_edges, _swap_in_place, replica_seeds
from .triads import CODE_CANON_PERMS, CODE_CLASS, CODE_N_CANON, MILO_IDS, N_CLASSES


@njit(cache=True, nogil=True)
def _census_multi(adj, colors, Ks, counts, ccounts, touched, ntouched):
    """One pass over connected triples updating the plain census and S coloured ones."""
    n = adj.shape[0]
    S = colors.shape[0]
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
                c = CODE_CLASS[code]
                counts[c] += 1
                for s in range(S):
                    K = Ks[s]
                    best = -1
                    for r in range(CODE_N_CANON[code]):
                        key = 0
                        for q in range(3):
                            node = CODE_CANON_PERMS[code, r, q]
                            x = v if node == 0 else (u if node == 1 else w)
                            key = key * K + colors[s, x]
                        if best < 0 or key < best:
                            best = key
                    idx = c * K * K * K + best
                    if ccounts[s, idx] == 0:
                        touched[s, ntouched[s]] = idx
                        ntouched[s] += 1
                    ccounts[s, idx] += 1


@njit(cache=True, nogil=True)
def _replicate(adj, seeds, swaps_per_edge, color_codes, Ks, permute_colors,
               sums, sumsq, csums, csumsq):
    """Randomize ``len(seeds)`` times, accumulating count sums and sums of squares.

    color_codes is (S, n); csums/csumsq are (S, 13 * Kmax^3). With
    ``permute_colors`` the node colours are shuffled in every replica as well.
    """
    S = color_codes.shape[0]
    singles0, mutuals0 = _split_edges(adj)
    counts = np.zeros(sums.shape[0], dtype=np.int64)
    size = csums.shape[1]
    ccounts = np.zeros((S, size), dtype=np.int64)
    touched = np.zeros((S, size), dtype=np.int64)
    ntouched = np.zeros(S, dtype=np.int64)
    cols = color_codes.copy()
    state = np.empty(1, dtype=np.uint64)
    for r in range(seeds.shape[0]):
        state[0] = seeds[r]
        g = adj.copy()
        singles = singles0.copy()
        mutuals = mutuals0.copy()
        _swap_in_place(g, singles, mutuals, swaps_per_edge, state)
        if permute_colors:
            for s in range(S):
                _shuffle(state, cols[s])
        counts[:] = 0
        ntouched[:] = 0
        _census_multi(g, cols, Ks, counts, ccounts, touched, ntouched)
        for c in range(counts.shape[0]):
            sums[c] += counts[c]
            sumsq[c] += counts[c] * counts[c]
        for s in range(S):
            for t in range(ntouched[s]):
                idx = touched[s, t]
                x = ccounts[s, idx]
                csums[s, idx] += x
                csumsq[s, idx] += x * x
                ccounts[s, idx] = 0


def _z(mu, mean, sd):
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (mu - mean) / sd
    return np.where(sd > 0, z, np.nan)


def _moments(sums, sumsq, n):
    mean = sums / n
    var = (sumsq - n * mean**2) / (n - 1)
    return mean, np.sqrt(np.clip(var, 0.0, None))


@dataclass(frozen=True)
class TriadReport:
    counts: np.ndarray
    orbit_counts: np.ndarray
    rnd_mean: np.ndarray
    rnd_sd: np.ndarray
    z: np.ndarray  # NaN where the null has zero spread
    n_rand: int
    rnd_sum: np.ndarray = field(repr=False)
    rnd_sumsq: np.ndarray = field(repr=False)

    @property
    def rnd_se(self) -> np.ndarray:
        """Standard error of the null mean (convergence diagnostic)."""
        return self.rnd_sd / np.sqrt(self.n_rand)

    def rows(self) -> list[dict]:
        return [
            {"id": m, "count": int(self.counts[c]), "rnd_mean": float(self.rnd_mean[c]),
             "rnd_sd": float(self.rnd_sd[c]), "z": None if np.isnan(self.z[c]) else float(self.z[c])}
            for c, m in enumerate(MILO_IDS)
        ]


@dataclass(frozen=True)
class ColoredStat:
    count: int
    rnd_mean: float
    rnd_sd: float
    z: float | None
    rnd_sum: int
    rnd_sumsq: int


def _run(g, colorings, n_rand, swaps_per_edge, seed, permute_colors=False):
    if n_rand < 2:
        raise ValueError("n_rand must be >= 2")
    adj = _as_adj(g)
    n = adj.shape[0]
    encoded = [encode_coloring(c, n) for c in colorings]
    Kmax = max([len(p) for _, p in encoded], default=1)
    S = len(encoded)
    codes = np.zeros((max(S, 1), n), dtype=np.int64)
    Ks = np.ones(max(S, 1), dtype=np.int64)
    for s, (c, p) in enumerate(encoded):
        codes[s] = c
        Ks[s] = len(p)
    size = N_CLASSES * Kmax**3 if S else 1
    sums = np.zeros(N_CLASSES, dtype=np.int64)
    sumsq = np.zeros(N_CLASSES, dtype=np.int64)
    csums = np.zeros((codes.shape[0], size), dtype=np.int64)
    csumsq = np.zeros_like(csums)
    seeds = replica_seeds(seed, n_rand)
    _replicate(adj, seeds, int(swaps_per_edge), codes[:S], Ks[:S], bool(permute_colors),
               sums, sumsq, csums[:S], csumsq[:S])
    census = triad_census(adj)
    mean, sd = _moments(sums.astype(float), sumsq.astype(float), n_rand)
    report = TriadReport(census.counts, census.orbit_counts, mean, sd,
                         _z(census.counts.astype(float), mean, sd), n_rand, sums, sumsq)
    colored = []
    for s, (c, palette) in enumerate(encoded):
        K = len(palette)
        real = colored_counts_array(adj, c, K)
        cs, cq = csums[s, : N_CLASSES * K**3], csumsq[s, : N_CLASSES * K**3]
        idx = np.flatnonzero((real > 0) | (cs > 0))
        m, v = _moments(cs[idx].astype(float), cq[idx].astype(float), n_rand)
        z = _z(real[idx].astype(float), m, v)
        out = {}
        for i, key in enumerate(idx.tolist()):
            zi = float(z[i])
            out[decode_key(key, palette)] = ColoredStat(
                int(real[key]), float(m[i]), float(v[i]), None if zi != zi else zi,
                int(cs[key]), int(cq[key]))
        colored.append(out)
    return report, colored


def motif_zscores(g, n_rand: int = 1000, swaps_per_edge: int = 10, seed=0) -> TriadReport:
    """Observed triad counts against ``n_rand`` degree-preserving randomizations.

    z = (count - rnd_mean) / rnd_sd, NaN when rnd_sd is zero. Replica r uses
    a seed derived from (seed, r), so results do not depend on scheduling.
    """
    return _run(g, [], n_rand, swaps_per_edge, seed)[0]


def colored_zscores(g, coloring, n_rand: int = 1000, swaps_per_edge: int = 10, seed=0,
                    permute_colors: bool = False) -> dict[ColoredTriadKey, ColoredStat]:
    """Per coloured key statistics; node colours stay fixed unless ``permute_colors``."""
    return _run(g, [coloring], n_rand, swaps_per_edge, seed, permute_colors)[1][0]


def motif_reports(g, colorings: Mapping[str, Sequence] | None = None, n_rand: int = 1000,
                  swaps_per_edge: int = 10, seed=0, permute_colors: bool = False):
    """Uncoloured report plus one coloured table per named colouring, on shared replicas."""
    colorings = dict(colorings or {})
    report, colored = _run(g, list(colorings.values()), n_rand, swaps_per_edge, seed,
                           permute_colors)
    return report, dict(zip(colorings.keys(), colored))


def significance_profile(z: np.ndarray) -> np.ndarray:
    """z-scores normalised to unit length (undefined entries treated as 0)."""
    z = np.nan_to_num(np.asarray(z, dtype=float))
    norm = np.sqrt(np.sum(z**2))
    return z / norm if norm > 0 else z


def aggregate_reports(reports: Sequence[TriadReport]) -> list[dict]:
    """Cross-day table: mean/SD of daily counts, pooled null moments, aggregate z.

    The null moments pool every (day, replica) sample; z = (mu - mu_rnd) / sd_rnd.
    """
    if not reports:
        return []
    counts = np.array([r.counts for r in reports], dtype=float)
    D = len(reports)
    N = sum(r.n_rand for r in reports)
    sums = np.sum([r.rnd_sum for r in reports], axis=0).astype(float)
    sumsq = np.sum([r.rnd_sumsq for r in reports], axis=0).astype(float)
    rm, rs = _moments(sums, sumsq, N)
    mu = counts.mean(axis=0)
    sd = counts.std(axis=0, ddof=1) if D > 1 else np.zeros(N_CLASSES)
    z = _z(mu, rm, rs)
    return [
        {"id": m, "mu": mu[c], "sigma": sd[c], "mu_rnd": rm[c], "sigma_rnd": rs[c],
         "z": None if np.isnan(z[c]) else z[c]}
        for c, m in enumerate(MILO_IDS)
    ]


def aggregate_colored(tables: Sequence[Mapping[ColoredTriadKey, ColoredStat]], n_rand: Sequence[int]) -> list[dict]:
    """Cross-day aggregate of coloured tables; keys absent on a day count as 0."""
    if not tables:
        return []
    keys = sorted(set().union(*[t.keys() for t in tables]))
    D = len(tables)
    N = int(sum(n_rand))
    rows = []
    for key in keys:
        daily = np.array([t[key].count if key in t else 0 for t in tables], dtype=float)
        s = float(sum(t[key].rnd_sum for t in tables if key in t))
        q = float(sum(t[key].rnd_sumsq for t in tables if key in t))
        rm, rs = _moments(s, q, N)
        mu = daily.mean()
        rows.append({
            "id": key.milo_id, "colors": "-".join(map(str, key.colors)), "mu": mu,
            "sigma": daily.std(ddof=1) if D > 1 else 0.0, "mu_rnd": float(rm), "sigma_rnd": float(rs),
            "z": None if rs <= 0 else float((mu - rm) / rs),
        })
    return rows

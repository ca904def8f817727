"""Orbit-position profiles, their Shannon diversity and cross-asset similarity."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

LN30 = float(np.log(30.0))


def position_profiles(orbit_counts: np.ndarray) -> np.ndarray:
    """Row-normalise orbit counts; rows with no participation become NaN."""
    C = np.asarray(orbit_counts, dtype=float)
    if np.any(C < 0):
        raise ValueError("orbit counts must be non-negative")
    tot = C.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        P = C / tot
    P[tot[:, 0] == 0] = np.nan
    return P


def profile_entropy(p) -> float | np.ndarray:
    """Shannon entropy -sum p ln p (0 ln 0 = 0); NaN for undefined profiles."""
    P = np.asarray(p, dtype=float)
    single = P.ndim == 1
    P = np.atleast_2d(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, -P * np.log(P), 0.0)
    d = terms.sum(axis=1)
    # equal mass on k orbits has entropy ln k; return it without summation roundoff
    support = (P > 0).sum(axis=1)
    ln_k = np.log(np.maximum(support, 1))
    hi = np.where(P > 0, P, -np.inf).max(axis=1)
    lo = np.where(P > 0, P, np.inf).min(axis=1)
    flat = (support > 0) & (hi - lo <= 4 * np.finfo(float).eps * hi)
    d = np.where(flat, ln_k, np.clip(d, 0.0, ln_k))
    d[np.isnan(P).any(axis=1)] = np.nan
    return float(d[0]) if single else d


@dataclass(frozen=True)
class SimilarityMatrix:
    H: np.ndarray  # NaN marks undefined pairs
    date: object = None
    tau: float | None = None
    alpha_level: float | None = None


def similarity_matrix(profiles: np.ndarray, date=None, tau=None, alpha_level=None) -> SimilarityMatrix:
    """Pearson correlation of profile vectors across the 30 orbit coordinates."""
    P = np.asarray(profiles, dtype=float)
    defined = ~np.isnan(P).any(axis=1)
    if defined.sum() < 2:
        raise ValueError("need at least 2 defined profiles")
    D = P - P.mean(axis=1, keepdims=True)
    norm = np.sqrt(np.sum(D**2, axis=1))
    ok = defined & (norm > 1e-15)
    n = len(P)
    H = np.full((n, n), np.nan)
    Z = D[ok] / norm[ok, None]
    H[np.ix_(ok, ok)] = np.clip(Z @ Z.T, -1.0, 1.0)
    # a defined asset is perfectly similar to itself even when its profile is flat
    idx = np.flatnonzero(defined)
    H[idx, idx] = 1.0
    H = 0.5 * (H + H.T)
    return SimilarityMatrix(H, date, tau, alpha_level)


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(dx @ dx), np.sqrt(dy @ dy)
    if sx <= 1e-15 * max(1.0, np.abs(x).max()) or sy <= 1e-15 * max(1.0, np.abs(y).max()):
        return None
    return float(np.clip(dx @ dy / (sx * sy), -1.0, 1.0))


def diversity_connectedness_correlation(d, measures: Mapping[str, Sequence[float]]) -> dict:
    """Cross-sectional Pearson correlation of diversity with to/from/net.

    Assets with undefined diversity are dropped; a measure with no spread
    (or diversity itself with no spread) gives None.
    """
    d = np.asarray(d, dtype=float)
    ok = ~np.isnan(d)
    if ok.sum() < 3:
        raise ValueError("need at least 3 assets with defined diversity")
    return {k: _pearson(d[ok], np.asarray(v, dtype=float)[ok]) for k, v in measures.items()}


def time_average_similarity(mats: Sequence[np.ndarray], min_coverage: int = 30) -> tuple[np.ndarray, np.ndarray]:
    """Entrywise mean over days where defined; entries seen fewer than
    ``min_coverage`` times are NaN. Returns (mean, coverage)."""
    if not len(mats):
        raise ValueError("no similarity matrices")
    S = np.asarray([getattr(m, "H", m) for m in mats], dtype=float)
    cover = (~np.isnan(S)).sum(axis=0)
    with np.errstate(invalid="ignore"):
        mean = np.nansum(S, axis=0) / cover
    mean[cover < max(min_coverage, 1)] = np.nan
    return mean, cover


def mean_log10_profiles(profile_stack: Sequence[np.ndarray]) -> np.ndarray:
    """log10 of the time-averaged profile per asset and orbit (heatmap data).

    Undefined days are excluded per asset; zero averages map to NaN.
    """
    P = np.asarray(profile_stack, dtype=float)
    with warnings.catch_warnings(), np.errstate(invalid="ignore", divide="ignore"):
        warnings.simplefilter("ignore", RuntimeWarning)
        out = np.log10(np.nanmean(P, axis=0))
    out[~np.isfinite(out)] = np.nan
    return out

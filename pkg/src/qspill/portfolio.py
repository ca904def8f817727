"""Inverse-matrix allocation rules (MVP, MCP, MCoP, MSP) and backtesting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import PortfolioError

log = logging.getLogger(__name__)

STRATEGIES = ("MVP", "MCP", "MCoP", "MSP")
ANNUALIZATION = 252


@dataclass(frozen=True)
class CovarianceSeries:
    dates: list
    cov: list[np.ndarray]
    corr: list[np.ndarray]
    skipped: list = field(default_factory=list)


def rolling_covariance(panel, w: int) -> CovarianceSeries:
    """Trailing-window sample covariance (ddof=1) and correlation.

    The matrices dated t use returns up to and including t. Windows in
    which some asset has zero variance are skipped and reported.
    """
    R = np.asarray(panel.returns, dtype=float)
    if w < 2 or w > len(R):
        raise PortfolioError(f"window {w} exceeds available history {len(R)}")
    dates, covs, corrs, skipped = [], [], [], []
    for end in range(w, len(R) + 1):
        X = R[end - w : end]
        S = np.cov(X, rowvar=False, ddof=1)
        S = 0.5 * (S + S.T)
        sd = np.sqrt(np.diag(S))
        d = panel.dates[end - 1]
        if np.any(sd <= 1e-15):
            skipped.append((d, "zero-variance asset in window"))
            continue
        C = S / np.outer(sd, sd)
        C = 0.5 * (C + C.T)
        np.fill_diagonal(C, 1.0)
        dates.append(d)
        covs.append(S)
        corrs.append(C)
    return CovarianceSeries(dates, covs, corrs, skipped)


def _symmetrize(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PortfolioError("matrix must be square")
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > 1e-8 * scale:
        raise PortfolioError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def weights_inverse_rule(M, return_ridge: bool = False):
    """w = M^-1 1 / (1' M^-1 1), with a small ridge when M is near singular.

    The ridge delta = 1e-6 trace(M)/N is added when the smallest eigenvalue
    falls below 1e-8 times the spectral norm.
    """
    M = _symmetrize(M)
    n = len(M)
    eig = np.linalg.eigvalsh(M)
    norm = float(np.abs(eig).max())
    ridge = 0.0
    if norm == 0:
        raise PortfolioError("degenerate normalization")
    if eig.min() < 1e-8 * norm:
        ridge = 1e-6 * float(np.trace(M)) / n
        if ridge <= 0:
            ridge = 1e-6 * norm
        M = M + ridge * np.eye(n)
    try:
        x = np.linalg.solve(M, np.ones(n))
    except np.linalg.LinAlgError:
        raise PortfolioError("degenerate normalization") from None
    total = x.sum()
    if not np.isfinite(total) or abs(total) <= 1e-12 * np.abs(x).sum():
        raise PortfolioError("degenerate normalization")
    w = x / total
    return (w, ridge) if return_ridge else w


def build_pci(jsot) -> np.ndarray:
    """Pairwise connectedness index: symmetrised off-diagonal spillovers, unit diagonal."""
    J = np.asarray(jsot, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise PortfolioError("spillover table must be square")
    P = 0.5 * (J + J.T)
    np.fill_diagonal(P, 1.0)
    return P


def msp_input(H) -> np.ndarray:
    """Similarity matrix ready for the inverse rule: undefined entries -> 0, unit diagonal."""
    H = np.array(H, dtype=float)
    H[np.isnan(H)] = 0.0
    np.fill_diagonal(H, 1.0)
    return 0.5 * (H + H.T)


@dataclass
class WeightSeries:
    strategy: str
    tau: float | None
    dates: list
    weights: np.ndarray  # (D, N)
    ridge: np.ndarray = None  # ridge added per date (0 when none)
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(len(self.dates), -1)
        if self.ridge is None:
            self.ridge = np.zeros(len(self.dates))

    def frame(self, symbols: Sequence[str]) -> pd.DataFrame:
        return pd.DataFrame(self.weights, index=pd.DatetimeIndex(self.dates, name="date"),
                            columns=list(symbols))


def weight_series(strategy: str, tau, dates, matrices) -> WeightSeries:
    """Apply the inverse rule to one matrix per date; failures are skipped."""
    kept, rows, ridges, skipped = [], [], [], []
    for d, M in zip(dates, matrices):
        try:
            w, r = weights_inverse_rule(M, return_ridge=True)
        except PortfolioError as exc:
            skipped.append((d, str(exc)))
            continue
        kept.append(d)
        rows.append(w)
        ridges.append(r)
    n = len(matrices[0]) if len(matrices) else 0
    W = np.array(rows) if rows else np.zeros((0, n))
    return WeightSeries(strategy, tau, kept, W, np.array(ridges), skipped)


@dataclass(frozen=True)
class PerformanceReport:
    annualization: int
    mean: float
    sd: float
    sharpe: float | None
    sharpe_cvar: float | None
    cvar: float
    daily: pd.Series
    cumulative: pd.Series
    group_weights: dict | None = None

    def row(self) -> dict:
        return {"Return": self.mean, "StdDev": self.sd, "Sharpe(StdDev)": self.sharpe,
                "Sharpe(CVaR)": self.sharpe_cvar}


def _cvar(r: np.ndarray, level: float) -> float:
    q = np.quantile(r, level)
    return float(-r[r <= q].mean())


def backtest(ws: WeightSeries, panel, cvar_level: float = 0.05, partition=None) -> PerformanceReport:
    """Hold the weights chosen at date t over the next return date.

    Daily return r_t = w_{t-1}' r_t; mean and SD are annualised with 252
    days, Sharpe ratios use a zero risk-free rate, and CVaR is minus the
    mean of returns at or below the ``cvar_level`` empirical quantile.
    """
    pos = {d: k for k, d in enumerate(panel.dates)}
    R = np.asarray(panel.returns, dtype=float)
    out_dates, rets = [], []
    start = None
    for d, w in zip(ws.dates, ws.weights):
        if d not in pos:
            raise PortfolioError(f"weight date {d} not in the returns panel")
        k = pos[d] + 1
        if k >= len(R):
            continue
        if start is None:
            start = d
        out_dates.append(panel.dates[k])
        rets.append(float(w @ R[k]))
    if not rets:
        raise PortfolioError("empty overlap between weights and returns")
    r = np.array(rets)
    A = ANNUALIZATION
    mean = A * r.mean()
    # a constant series has exactly zero spread (avoid roundoff noise)
    sd = np.sqrt(A) * r.std(ddof=1) if len(r) > 1 and np.ptp(r) > 0 else 0.0
    cvar = _cvar(r, cvar_level)
    sharpe = mean / sd if sd > 1e-15 else None
    sharpe_cvar = mean / (np.sqrt(A) * cvar) if cvar > 1e-15 else None
    idx = pd.DatetimeIndex([start] + out_dates, name="date")
    cumulative = pd.Series(np.concatenate([[0.0], np.cumsum(r)]), index=idx, name="cumulative")
    gw = group_weights(ws, partition) if partition is not None else None
    return PerformanceReport(A, float(mean), float(sd), sharpe, sharpe_cvar, cvar,
                             pd.Series(r, index=pd.DatetimeIndex(out_dates, name="date"), name="return"),
                             cumulative, gw)


def group_weights(ws: WeightSeries, partition: Sequence[str]) -> dict[str, float]:
    """Time-averaged total weight per group."""
    labels = list(partition)
    if ws.weights.shape[1] != len(labels):
        raise PortfolioError("partition does not match the number of assets")
    if any(lab is None or lab == "" for lab in labels):
        raise PortfolioError("unknown group label")
    groups = sorted(set(labels))
    G = np.array([[lab == g for lab in labels] for g in groups], dtype=float)
    per_date = ws.weights @ G.T
    return {g: float(v) for g, v in zip(groups, per_date.mean(axis=0))}

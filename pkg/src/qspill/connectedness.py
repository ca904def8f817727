"""Generalized and extended-joint connectedness measures.

Matrix convention throughout: row ``i`` is the receiver, column ``j`` the
transmitter, so ``gsot[i, j]`` is the share of i's forecast error variance
attributable to shocks in j.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import ConnectednessError, QSpillError
from .qvar import MaCoefficients, fit_qvar_many, ma_coefficients

log = logging.getLogger(__name__)

GROUP_KEYS = ("internal", "external", "inclusive", "exclusive", "exclusive_masked", "aggregate")


def _psi_array(psi) -> np.ndarray:
    if isinstance(psi, MaCoefficients):
        return psi.stack()
    return np.asarray(psi, dtype=float)


def _forecast_error_variance(P: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    # diag of sum_h Psi_h Sigma Psi_h'
    PS = P @ sigma
    return np.einsum("hij,hij->i", PS, P)


def gfevd(psi, sigma: np.ndarray, H: int | None = None, scalar: str = "jj") -> np.ndarray:
    """Unnormalised generalized FEVD (gSOV).

    ``scalar="jj"`` divides the squared response to shock j by
    Sigma_jj (the usual generalized FEVD); ``scalar="ii"`` uses Sigma_ii
    instead, which some write-ups print.
    """
    P = _psi_array(psi)
    if H is not None:
        P = P[:H]
    sigma = np.asarray(sigma, dtype=float)
    d = np.diag(sigma)
    if np.any(d <= 0):
        raise ConnectednessError("zero diagonal in the residual covariance")
    num = np.sum((P @ sigma) ** 2, axis=0)
    if scalar == "jj":
        num = num / d[None, :]
    elif scalar == "ii":
        num = num / d[:, None]
    else:
        raise ValueError("scalar must be 'jj' or 'ii'")
    return num / _forecast_error_variance(P, sigma)[:, None]


def normalize_gsot(gsov: np.ndarray) -> np.ndarray:
    gsov = np.asarray(gsov, dtype=float)
    rows = gsov.sum(axis=1)
    if np.any(rows <= 0):
        raise ConnectednessError("zero row in the variance decomposition")
    return gsov / rows[:, None]


def joint_from(psi, sigma: np.ndarray, H: int | None = None, ridge: float = 1e-10) -> np.ndarray:
    """Joint FROM connectedness for every variable, bounded in [0, 1]."""
    P = _psi_array(psi)
    if H is not None:
        P = P[:H]
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    PS = P @ sigma
    denom = _forecast_error_variance(P, sigma)
    if np.any(denom <= 0):
        raise ConnectednessError("zero forecast error variance")
    out = np.empty(n)
    for i in range(n):
        keep = np.r_[0:i, i + 1 : n]
        S = sigma[np.ix_(keep, keep)]
        if np.linalg.cond(S) > 1e12:
            S = S + ridge * np.eye(n - 1)
        try:
            cho = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ConnectednessError("singular conditioning matrix") from None
        Rv = PS[:, i, keep]  # (H, n-1): e_i' Psi_h Sigma M_i
        z = np.linalg.solve(cho, Rv.T)
        out[i] = np.sum(z * z) / denom[i]
    if np.any(out < -1e-12) or np.any(out > 1 + 1e-12):
        raise ConnectednessError("joint FROM outside [0, 1]")
    return np.clip(out, 0.0, 1.0)


def joint_tci(from_: np.ndarray) -> float:
    return float(np.mean(from_))


def generalized_from(gsot: np.ndarray) -> np.ndarray:
    gsot = np.asarray(gsot, dtype=float)
    return gsot.sum(axis=1) - np.diag(gsot)


def joint_sot(gsot: np.ndarray, joint_from_: np.ndarray, allow_degenerate: bool = False) -> np.ndarray:
    """Rescale gSOT rows so their off-diagonal mass equals the joint FROM.

    With ``allow_degenerate`` a row whose generalized and joint FROM are both
    zero (an isolated variable) gets scaling factor 0 instead of raising.
    """
    gsot = np.asarray(gsot, dtype=float)
    jf = np.asarray(joint_from_, dtype=float)
    gen = generalized_from(gsot)
    zero = gen <= 0
    if np.any(zero):
        if not allow_degenerate or np.any(jf[zero] > 1e-12):
            raise ConnectednessError("zero generalized FROM")
    lam = np.divide(jf, gen, out=np.zeros_like(jf), where=~zero)
    jsot = gsot * lam[:, None]
    np.fill_diagonal(jsot, 1.0 - jf)
    return jsot


def directional_measures(jsot: np.ndarray, from_: np.ndarray) -> dict[str, np.ndarray]:
    jsot = np.asarray(jsot, dtype=float)
    if jsot.ndim != 2 or jsot.shape[0] != jsot.shape[1]:
        raise ConnectednessError("spillover table must be square")
    off = jsot - np.diag(np.diag(jsot))
    to = off.sum(axis=0)
    return {"to": to, "net": to - np.asarray(from_, dtype=float), "npdc": off.T - off}


def aggregate_matrix(jsot: np.ndarray, groups: Sequence[str]) -> tuple[list[str], np.ndarray]:
    """Sum the spillover table over sector blocks and row-normalise."""
    labels = sorted(set(groups))
    G = np.zeros((len(labels), len(jsot)))
    for r, g in enumerate(groups):
        G[labels.index(g), r] = 1.0
    blocks = G @ jsot @ G.T
    return labels, blocks / blocks.sum(axis=1, keepdims=True)


def group_decompose(
    jsot: np.ndarray,
    joint_from_: np.ndarray,
    partition: Sequence[str],
    equity_tag: Sequence[bool] | None = None,
    exclusive_tci: float | None = None,
) -> dict:
    """Internal/external, inclusive/exclusive and aggregate TCIs.

    internal + external equals the overall TCI. ``inclusive`` keeps only
    pairs with exactly one equity member. ``exclusive`` is the TCI of a
    commodity-only re-estimation and has to be supplied by the caller;
    ``exclusive_masked`` is the commodity block of this table instead.
    ``aggregate`` is the TCI of the row-normalised sector-block table.
    """
    jsot = np.asarray(jsot, dtype=float)
    n = len(jsot)
    groups = list(partition)
    if len(groups) != n:
        raise ConnectednessError("partition does not cover all assets")
    g = np.asarray(groups, dtype=object)
    same = g[:, None] == g[None, :]
    off = jsot * (1.0 - np.eye(n))
    out: dict = {
        "internal": float((off * same).sum() / n),
        "external": float((off * ~same).sum() / n),
        "internal_by_group": {
            lab: float((off * (same & (g[:, None] == lab))).sum() / n) for lab in sorted(set(groups))
        },
    }
    if equity_tag is not None:
        eq = np.asarray(equity_tag, dtype=bool)
        if eq.shape != (n,):
            raise ConnectednessError("equity tag does not cover all assets")
        cross = eq[:, None] != eq[None, :]
        out["inclusive"] = float((off * cross).sum() / n)
        comm = ~eq
        nc = int(comm.sum())
        out["exclusive_masked"] = (
            float(off[np.ix_(comm, comm)].sum() / nc) if nc else float("nan")
        )
        out["exclusive"] = float("nan") if exclusive_tci is None else float(exclusive_tci)
    labels, agg = aggregate_matrix(jsot, groups)
    out["aggregate"] = float(generalized_from(agg).mean()) if len(labels) > 1 else 0.0
    return out


@dataclass(frozen=True)
class SpilloverSet:
    tau: float
    H: int
    mode: str
    gsot: np.ndarray
    jsot: np.ndarray
    joint_from: np.ndarray
    to: np.ndarray
    net: np.ndarray
    npdc: np.ndarray
    tci_overall: float
    tci_groups: dict = field(default_factory=dict)
    sigma: np.ndarray | None = field(default=None, repr=False)

    @property
    def from_(self) -> np.ndarray:
        return self.joint_from


def spillover_set(
    psi,
    sigma: np.ndarray,
    *,
    tau: float,
    mode: str = "joint",
    scalar: str = "jj",
    partition: Sequence[str] | None = None,
    equity_tag: Sequence[bool] | None = None,
    exclusive_tci: float | None = None,
) -> SpilloverSet:
    """Full connectedness chain for one (Psi, Sigma) pair.

    ``mode="generalized"`` reports gSOT-based FROM/TO/NET; ``mode="joint"``
    rescales to jSOT first.
    """
    P = _psi_array(psi)
    gsot = normalize_gsot(gfevd(P, sigma, scalar=scalar))
    if mode == "generalized":
        from_ = generalized_from(gsot)
        table = gsot
    elif mode == "joint":
        from_ = joint_from(P, sigma)
        table = joint_sot(gsot, from_, allow_degenerate=True)
    else:
        raise ValueError("mode must be 'generalized' or 'joint'")
    d = directional_measures(table, from_)
    groups = {}
    if partition is not None:
        groups = group_decompose(table, from_, partition, equity_tag, exclusive_tci)
    return SpilloverSet(
        tau=tau, H=len(P), mode=mode, gsot=gsot, jsot=table, joint_from=from_,
        to=d["to"], net=d["net"], npdc=d["npdc"], tci_overall=joint_tci(from_),
        tci_groups=groups, sigma=np.asarray(sigma, dtype=float),
    )


@dataclass
class RollingConnectedness:
    tau: float
    dates: list
    sets: list[SpilloverSet]
    skipped: list[tuple] = field(default_factory=list)

    def tci_frame(self) -> pd.DataFrame:
        data = {"tci": [s.tci_overall for s in self.sets]}
        for key in GROUP_KEYS:
            if self.sets and key in self.sets[0].tci_groups:
                data[key] = [s.tci_groups[key] for s in self.sets]
        return pd.DataFrame(data, index=pd.DatetimeIndex(self.dates, name="date"))


def _window_task(args):
    (Y, p, taus, H, modes, scalar, partition, equity, qr_options) = args
    results = {}
    try:
        models = fit_qvar_many(Y, p, taus, **qr_options)
        sub_models = None
        if equity is not None:
            comm = ~np.asarray(equity, dtype=bool)
            if comm.sum() >= 2:
                sub_models = fit_qvar_many(Y[:, comm], p, taus, **qr_options)
        for q, model in enumerate(models):
            psi = ma_coefficients(model, H)
            for mode in modes:
                excl = None
                if sub_models is not None:
                    sub = sub_models[q]
                    excl = spillover_set(
                        ma_coefficients(sub, H), sub.sigma, tau=sub.tau, mode=mode, scalar=scalar
                    ).tci_overall
                results[(model.tau, mode)] = spillover_set(
                    psi, model.sigma, tau=model.tau, mode=mode, scalar=scalar,
                    partition=partition, equity_tag=equity, exclusive_tci=excl,
                )
    except (QSpillError, np.linalg.LinAlgError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return results, None


def map_tasks(fn, tasks, workers: int = 1, chunksize: int = 8):
    """Order-preserving map, in-process or over a process pool."""
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunksize))


def rolling_connectedness_modes(
    panel,
    w: int,
    p: int,
    taus: Sequence[float],
    H: int = 20,
    modes: Sequence[str] = ("joint",),
    *,
    scalar: str = "jj",
    partition: Sequence[str] | None = None,
    equity_tag: Sequence[bool] | None = None,
    workers: int = 1,
    qr_options: Mapping | None = None,
) -> dict[tuple[float, str], RollingConnectedness]:
    """Rolling-window connectedness for several quantiles and modes.

    One QVAR fit per window serves every quantile and mode. Windows end at
    every date from the ``w``-th observation on. A window whose estimation
    fails is skipped and recorded, never interpolated.
    """
    for mode in modes:
        if mode not in ("generalized", "joint"):
            raise ValueError("mode must be 'generalized' or 'joint'")
    Y = np.asarray(panel.returns, dtype=float)
    dates = list(panel.dates)
    if len(Y) < w + 1:
        raise ConnectednessError(f"panel length {len(Y)} < window + 1 = {w + 1}")
    taus = [float(t) for t in taus]
    ends = range(w, len(Y) + 1)
    tasks = [
        (Y[end - w : end], p, tuple(taus), H, tuple(modes), scalar,
         None if partition is None else tuple(partition),
         None if equity_tag is None else tuple(bool(e) for e in equity_tag),
         dict(qr_options or {}))
        for end in ends
    ]
    out = {(tau, mode): RollingConnectedness(tau, [], []) for tau in taus for mode in modes}
    for end, (res, err) in zip(ends, map_tasks(_window_task, tasks, workers)):
        date = dates[end - 1]
        if res is None:
            log.info("window ending %s skipped: %s", date, err)
            for rc in out.values():
                rc.skipped.append((date, err))
            continue
        for key, s in res.items():
            out[key].dates.append(date)
            out[key].sets.append(s)
    return out


def rolling_connectedness_multi(panel, w: int, p: int, taus: Sequence[float], H: int = 20,
                                mode: str = "joint", **kwargs) -> dict[float, RollingConnectedness]:
    res = rolling_connectedness_modes(panel, w, p, taus, H, (mode,), **kwargs)
    return {tau: rc for (tau, _), rc in res.items()}


def rolling_connectedness(panel, w: int, p: int, tau: float, H: int = 20, mode: str = "joint",
                          **kwargs) -> RollingConnectedness:
    """One SpilloverSet per window end-date at a single quantile."""
    return rolling_connectedness_multi(panel, w, p, [tau], H, mode, **kwargs)[float(tau)]

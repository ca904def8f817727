"""Synthetic multi-sector price panels for demos and tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from .marketdata import Asset, PricePanel

DEFAULT_SECTORS = (
    "energy", "equity", "grains_oilseeds", "precious_metals", "equity", "softs",
    "industrial_metals", "energy", "livestock", "equity",
)


def simulate_var1(phi: np.ndarray, T: int, rng, scale=None, chol=None, df: float | None = None,
                  burn: int = 200) -> np.ndarray:
    """Simulate y_t = phi y_{t-1} + e_t with Gaussian (or Student-t) errors."""
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    L = np.eye(n) if chol is None else np.asarray(chol, dtype=float)
    y = np.zeros(n)
    out = np.empty((T, n))
    for t in range(T + burn):
        z = rng.standard_normal(n) if df is None else rng.standard_t(df, n) * np.sqrt((df - 2) / df)
        y = phi @ y + L @ z
        if t >= burn:
            out[t - burn] = y
    return out if scale is None else out * scale


def synthetic_panel(n_assets: int = 10, n_days: int = 600, seed: int = 0,
                    start: str = "2010-01-04") -> PricePanel:
    """Daily prices with sector-correlated, mildly persistent heavy-tailed returns.

    ``n_days`` is the number of price dates; assets cycle through a default
    list of sectors that always contains equities and commodities.
    """
    rng = np.random.default_rng(seed)
    sectors = [DEFAULT_SECTORS[i % len(DEFAULT_SECTORS)] for i in range(n_assets)]
    labels = sorted(set(sectors))
    load = np.array([[s == g for g in labels] for s in sectors], dtype=float)
    corr = 0.05 + 0.4 * load @ load.T
    np.fill_diagonal(corr, 1.0)
    phi = 0.03 * rng.standard_normal((n_assets, n_assets)) / np.sqrt(n_assets)
    phi += np.diag(rng.uniform(-0.1, 0.1, n_assets))
    # a few strong lead-lag channels give the spillover network some hubs
    for i in range(n_assets):
        for j in rng.choice(n_assets, size=2, replace=False):
            if j != i:
                phi[i, j] += rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 0.5)
    rad = np.abs(np.linalg.eigvals(phi)).max()
    if rad > 0.9:
        phi *= 0.9 / rad
    vol = rng.uniform(0.008, 0.02, n_assets)
    r = simulate_var1(phi, n_days - 1, rng, scale=vol, chol=np.linalg.cholesky(corr), df=5.0)
    logp = np.vstack([np.zeros(n_assets), np.cumsum(r, axis=0)]) + np.log(100.0)
    dates = pd.bdate_range(start, periods=n_days)
    assets = tuple(
        Asset.from_sector7(f"A{i:02d}", sectors[i], name=f"{sectors[i]} {i}") for i in range(n_assets)
    )
    return PricePanel(dates, assets, np.exp(logp))


def write_panel_csvs(panel: PricePanel, directory: str | Path) -> tuple[list[Path], Path]:
    """One price CSV per asset plus a partition file; returns (price paths, metadata path)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, a in enumerate(panel.assets):
        p = d / f"{a.symbol}.csv"
        pd.DataFrame({"date": panel.dates.strftime("%Y-%m-%d"), a.symbol: panel.prices[:, i]}).to_csv(
            p, index=False, float_format="%.10f", lineterminator="\n")
        paths.append(p)
    meta = d / "partition.csv"
    pd.DataFrame(
        [{"symbol": a.symbol, "name": a.name, "sector7": a.sector7, "sector4": a.sector4,
          "sector2": a.sector2} for a in panel.assets]
    ).to_csv(meta, index=False, lineterminator="\n")
    return paths, meta

"""Price ingestion, calendar alignment, log returns and descriptive statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

SECTOR7_TO_4 = {
    "energy": "energy",
    "grains_oilseeds": "agriculture",
    "softs": "agriculture",
    "livestock": "agriculture",
    "precious_metals": "metals",
    "industrial_metals": "metals",
    "equity": "equity",
}
EQUITY = "equity"
COMMODITY = "commodity"
UNASSIGNED = "unassigned"

# Constant-only Dickey-Fuller critical values (1%, 5%, 10%).
ADF_CRITICAL_VALUES = {"1%": -3.43, "5%": -2.86, "10%": -2.57}


@dataclass(frozen=True)
class Asset:
    symbol: str
    name: str
    sector7: str
    sector4: str
    sector2: str

    @classmethod
    def from_sector7(cls, symbol: str, sector7: str, name: str | None = None) -> "Asset":
        try:
            sector4 = SECTOR7_TO_4[sector7]
        except KeyError:
            raise DataError(f"no default coarsening for sector7 label {sector7!r}") from None
        sector2 = EQUITY if sector7 == EQUITY else COMMODITY
        return cls(symbol, name or symbol, sector7, sector4, sector2)

    def label(self, scheme: int) -> str:
        """Sector label at 2-, 4- or 7-class granularity."""
        if scheme == 2:
            return self.sector2
        if scheme == 4:
            return self.sector4
        if scheme == 7:
            return self.sector7
        raise ValueError(f"unknown colouring scheme {scheme}; expected 2, 4 or 7")


def _check_coarsening(assets: Sequence[Asset]) -> None:
    seen: dict[str, tuple[str, str]] = {}
    for a in assets:
        coarse = (a.sector4, a.sector2)
        if seen.setdefault(a.sector7, coarse) != coarse:
            raise DataError(
                f"sector7 label {a.sector7!r} maps to inconsistent coarser labels"
            )


@dataclass(frozen=True)
class PricePanel:
    dates: pd.DatetimeIndex
    assets: tuple[Asset, ...]
    prices: np.ndarray

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        if prices.shape != (len(self.dates), len(self.assets)):
            raise DataError("price matrix shape does not match dates x assets")
        if not self.dates.is_monotonic_increasing or self.dates.has_duplicates:
            raise DataError("dates must be strictly increasing")
        if not np.all(np.isfinite(prices)):
            raise DataError("missing price cells after alignment")
        if np.any(prices <= 0):
            raise DataError("non-positive price")
        _check_coarsening(self.assets)
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)

    @property
    def symbols(self) -> list[str]:
        return [a.symbol for a in self.assets]


@dataclass(frozen=True)
class ReturnsPanel:
    dates: pd.DatetimeIndex
    assets: tuple[Asset, ...]
    returns: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=float)
        if r.ndim != 2 or r.shape != (len(self.dates), len(self.assets)):
            raise DataError("returns matrix shape does not match dates x assets")
        if not np.all(np.isfinite(r)):
            raise DataError("returns must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "returns", r)

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def n_assets(self) -> int:
        return len(self.assets)

    @property
    def symbols(self) -> list[str]:
        return [a.symbol for a in self.assets]

    def labels(self, scheme: int) -> list[str]:
        return [a.label(scheme) for a in self.assets]

    def select(self, columns: Sequence[int]) -> "ReturnsPanel":
        idx = list(columns)
        return ReturnsPanel(self.dates, tuple(self.assets[i] for i in idx), self.returns[:, idx])

    def slice(self, start: int, stop: int) -> "ReturnsPanel":
        return ReturnsPanel(self.dates[start:stop], self.assets, self.returns[start:stop])


def read_metadata(path: str | Path) -> dict[str, Asset]:
    """Read an asset partition file.

    Required columns are ``symbol`` and ``sector7``; ``name``, ``sector4``
    and ``sector2`` are optional. Missing coarse labels are derived from the
    standard seven-sector taxonomy.
    """
    out: dict[str, Asset] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            symbol = row["symbol"].strip()
            sector7 = row["sector7"].strip()
            name = (row.get("name") or symbol).strip()
            s4 = (row.get("sector4") or "").strip()
            s2 = (row.get("sector2") or "").strip()
            if s4 and s2:
                out[symbol] = Asset(symbol, name, sector7, s4, s2)
            else:
                out[symbol] = Asset.from_sector7(symbol, sector7, name)
    _check_coarsening(list(out.values()))
    return out


def _read_price_csv(path: Path) -> pd.Series:
    df = pd.read_csv(path, encoding="utf-8")
    if df.shape[1] != 2:
        raise DataError(f"{path}: expected a date column and one price column")
    date_col, price_col = df.columns
    try:
        dates = pd.to_datetime(df[date_col], format="ISO8601")
    except (ValueError, TypeError) as exc:
        raise DataError(f"{path}: unparseable date ({exc})") from None
    prices = pd.to_numeric(df[price_col], errors="coerce")
    if prices.isna().any():
        raise DataError(f"{path}: unparseable price value")
    if (prices <= 0).any():
        raise DataError(f"{path}: non-positive price")
    s = pd.Series(prices.to_numpy(dtype=float), index=pd.DatetimeIndex(dates), name=str(price_col))
    if s.index.has_duplicates:
        raise DataError(f"{path}: duplicate dates")
    return s.sort_index()


def _parse_policy(policy: str) -> int | None:
    if policy == "intersect":
        return None
    if policy.startswith("ffill:"):
        try:
            limit = int(policy.split(":", 1)[1])
        except ValueError:
            raise DataError(f"bad alignment policy {policy!r}") from None
        if limit < 1:
            raise DataError("ffill limit must be >= 1")
        return limit
    raise DataError(f"unknown alignment policy {policy!r}")


def load_price_panel(
    sources: Iterable[str | Path],
    policy: str = "intersect",
    metadata: Mapping[str, Asset] | str | Path | None = None,
) -> PricePanel:
    """Load one-price-per-file CSVs into an aligned panel.

    The price column header is the asset symbol. ``policy`` is either
    ``"intersect"`` (keep common dates only) or ``"ffill:k"`` (take the union
    of dates inside the common span, carry prices forward across gaps of at
    most ``k`` days, then drop rows that are still incomplete).
    """
    limit = _parse_policy(policy)
    series = [_read_price_csv(Path(p)) for p in sources]
    if len(series) < 2:
        raise DataError("need at least 2 assets")
    symbols = [s.name for s in series]
    if len(set(symbols)) != len(symbols):
        raise DataError("duplicate asset symbols across sources")

    frame = pd.concat(series, axis=1, join="inner" if limit is None else "outer")
    if limit is not None:
        start = max(s.index[0] for s in series)
        stop = min(s.index[-1] for s in series)
        frame = frame.loc[(frame.index >= start) & (frame.index <= stop)]
        frame = frame.ffill(limit=limit).dropna()
    if frame.empty:
        raise DataError("empty intersection of dates")

    if isinstance(metadata, (str, Path)):
        metadata = read_metadata(metadata)
    assets = []
    for sym in symbols:
        if metadata is not None and sym in metadata:
            assets.append(metadata[sym])
        elif metadata is not None:
            raise DataError(f"asset {sym!r} missing from partition metadata")
        else:
            assets.append(Asset(sym, sym, UNASSIGNED, UNASSIGNED, UNASSIGNED))
    return PricePanel(pd.DatetimeIndex(frame.index), tuple(assets), frame.to_numpy())


def compute_log_returns(panel: PricePanel) -> ReturnsPanel:
    if len(panel.dates) < 2:
        raise DataError("need at least 2 dates to form returns")
    logp = np.log(panel.prices)
    return ReturnsPanel(panel.dates[1:], panel.assets, np.diff(logp, axis=0))


def central_moments(x: np.ndarray) -> tuple[float, float, float, float]:
    """Mean and 2nd-4th central moments, all with 1/T normalisation."""
    x = np.asarray(x, dtype=float)
    mean = x.mean()
    d = x - mean
    return mean, np.mean(d**2), np.mean(d**3), np.mean(d**4)


def adf_statistic(y: np.ndarray, lags: int = 1) -> float:
    """t-statistic on the lagged level in a constant-only ADF regression."""
    y = np.asarray(y, dtype=float)
    if len(y) < lags + 10:
        raise DataError("insufficient observations for ADF")
    dy = np.diff(y)
    n = len(dy) - lags
    cols = [np.ones(n), y[lags:-1]]
    for j in range(1, lags + 1):
        cols.append(dy[lags - j : len(dy) - j])
    X = np.column_stack(cols)
    target = dy[lags:]
    beta, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ beta
    dof = n - X.shape[1]
    s2 = resid @ resid / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    return float(beta[1] / np.sqrt(cov[1, 1]))


@dataclass(frozen=True)
class AssetStats:
    mean: float
    sd: float
    skew: float
    exkurt: float
    jb: float
    adf: float


def asset_stats(x: np.ndarray, adf_lags: int = 1) -> AssetStats:
    x = np.asarray(x, dtype=float)
    T = len(x)
    if T < 30 or T < adf_lags + 10:
        raise DataError("insufficient observations")
    mean, m2, m3, m4 = central_moments(x)
    if m2 <= 0:
        raise DataError("degenerate variance")
    skew = m3 / m2**1.5
    exkurt = m4 / m2**2 - 3.0
    jb = T / 6.0 * (skew**2 + exkurt**2 / 4.0)
    return AssetStats(mean, float(np.sqrt(m2)), skew, exkurt, jb, adf_statistic(x, adf_lags))


def descriptive_stats(rp: ReturnsPanel, adf_lags: int = 1) -> dict[str, AssetStats]:
    """Per-asset summary of the returns panel, keyed by symbol."""
    return {a.symbol: asset_stats(rp.returns[:, i], adf_lags) for i, a in enumerate(rp.assets)}


def stats_table(rp: ReturnsPanel, adf_lags: int = 1) -> pd.DataFrame:
    """Descriptive statistics laid out like a summary-statistics table."""
    stats = descriptive_stats(rp, adf_lags)
    rows = []
    for a in rp.assets:
        s = stats[a.symbol]
        rows.append(
            {
                "category": a.sector7,
                "market": a.name,
                "symbol": a.symbol,
                "mean_x1e3": s.mean * 1e3,
                "sd": s.sd,
                "skew": s.skew,
                "exkurt": s.exkurt,
                "jb": s.jb,
                "adf": s.adf,
            }
        )
    return pd.DataFrame(rows)

"""End-to-end orchestration: configuration, staged execution, artifacts and manifest."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from . import backbone as bb
from .connectedness import map_tasks, rolling_connectedness_modes
from .errors import ConfigError
from .marketdata import EQUITY, compute_log_returns, load_price_panel, stats_table
from .motifs.census import DirectedGraph
from .motifs.significance import aggregate_colored, aggregate_reports, motif_reports
from .motifs.triads import MILO_IDS, N_ORBITS
from .orbits import (
    diversity_connectedness_correlation,
    mean_log10_profiles,
    position_profiles,
    profile_entropy,
    similarity_matrix,
    time_average_similarity,
)
from .portfolio import STRATEGIES, backtest, build_pci, group_weights, msp_input, rolling_covariance, weight_series

log = logging.getLogger(__name__)

OUTPUT_ENV = "QSPILL_OUTPUT_ROOT"
STAGES = ("ingest", "connectedness", "backbone", "motifs", "orbits", "portfolio")
# execution-only settings; they never change results and are left out of the config hash
EXECUTION_KEYS = ("workers", "output_dir")
SOURCES = (bb.CT, bb.NPDC)
_STAGE_SEED = {"motifs": 1}


@dataclass
class PipelineConfig:
    inputs: list[str] = field(default_factory=list)
    partition: str | None = None
    policy: str = "intersect"
    quantiles: tuple[float, ...] = (0.05, 0.5, 0.95)
    window: int = 200
    robust_window: int = 250
    p: int = 1
    horizon: int = 20
    alphas: tuple[float, ...] = (0.05, 0.10)
    n_rand: int = 1000
    swaps_per_edge: int = 10
    seed: int = 0
    strategies: tuple[str, ...] = STRATEGIES
    mode: str = "joint"
    scalar: str = "jj"
    adf_lags: int = 1
    group_scheme: int = 4
    color_schemes: tuple[int, ...] = (2, 4, 7)
    permute_colors: bool = False
    keep_degree_one: bool = False
    threshold_cutoff: float = 0.1
    min_coverage: int = 30
    msp_alpha: float | None = None
    msp_source: str = bb.CT
    msp_average: str = "trailing"
    covariance_source: str = "sample"
    cvar_level: float = 0.05
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        for name in ("quantiles", "alphas", "strategies", "color_schemes"):
            setattr(self, name, tuple(getattr(self, name)))
        self.inputs = [str(p) for p in self.inputs]
        self.validate()

    def validate(self) -> None:
        if not self.quantiles or any(not (0.0 < q < 1.0) for q in self.quantiles):
            raise ConfigError(f"quantiles must lie in (0, 1): {self.quantiles}")
        if len(set(self.quantiles)) != len(self.quantiles):
            raise ConfigError("duplicate quantiles")
        if not self.alphas or any(not (0.0 < a <= 1.0) for a in self.alphas):
            raise ConfigError(f"alpha levels must lie in (0, 1]: {self.alphas}")
        if self.msp_alpha is not None and self.msp_alpha not in self.alphas:
            raise ConfigError("msp_alpha must be one of the alpha levels")
        if self.p < 1 or self.horizon < 1:
            raise ConfigError("lag order and horizon must be >= 1")
        if self.window < 2 or self.robust_window < 2:
            raise ConfigError("windows must be >= 2")
        if self.n_rand < 2:
            raise ConfigError("n_rand must be >= 2")
        if self.swaps_per_edge < 1:
            raise ConfigError("swaps_per_edge must be >= 1")
        bad = set(self.strategies) - set(STRATEGIES)
        if bad:
            raise ConfigError(f"unknown strategies {sorted(bad)}")
        if set(self.color_schemes) - {2, 4, 7} or self.group_scheme not in (2, 4, 7):
            raise ConfigError("colouring schemes must be among 2, 4, 7")
        if self.mode not in ("joint", "generalized") or self.scalar not in ("jj", "ii"):
            raise ConfigError("mode must be joint|generalized and scalar jj|ii")
        if self.msp_source not in SOURCES or self.msp_average not in ("trailing", "daily"):
            raise ConfigError("msp_source must be CT|NPDC and msp_average trailing|daily")
        if self.covariance_source not in ("sample", "qvar"):
            raise ConfigError("covariance_source must be sample|qvar")
        if not 0.0 < self.cvar_level < 1.0:
            raise ConfigError("cvar_level must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def validate_panel(self, n_assets: int) -> None:
        floor = n_assets * self.p + 20
        if self.window <= floor:
            raise ConfigError(f"window {self.window} must exceed N*p + 20 = {floor}")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_toml(cls, path: str | Path, **overrides) -> "PipelineConfig":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        data = dict(data.get("pipeline", data))
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def to_dict(self, include_execution: bool = True) -> dict:
        d = dataclasses.asdict(self)
        if not include_execution:
            for k in EXECUTION_KEYS:
                d.pop(k)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(False), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def resolve_output(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ENV, ".")) / "qspill_out"


# ---------------------------------------------------------------- serialization


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, (np.floating,)):
        return _clean(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, pd.Timestamp):
        return x.strftime("%Y-%m-%d")
    return x


def _fmt_dates(dates) -> list[str]:
    return [pd.Timestamp(d).strftime("%Y-%m-%d") for d in dates]


class ArtifactWriter:
    """Writes stage outputs and keeps the manifest in sync with what exists on disk."""

    def __init__(self, root: Path, config: PipelineConfig, manifest_name: str = "manifest.json"):
        self.root = Path(root)
        self.manifest_name = manifest_name
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.stages: list[dict] = []
        self._current: dict | None = None

    def begin(self, stage: str) -> None:
        self._current = {"name": stage, "files": {}}
        self.stages.append(self._current)

    def _record(self, name: str, data: bytes) -> Path:
        path = self.root / name
        path.write_bytes(data)
        self._current["files"][name] = hashlib.sha256(data).hexdigest()
        return path

    def csv(self, name: str, df: pd.DataFrame, index: bool = False) -> Path:
        text = df.to_csv(index=index, float_format="%.12g", lineterminator="\n", na_rep="")
        return self._record(name, text.encode())

    def json(self, name: str, obj: Any) -> Path:
        text = json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)
        return self._record(name, (text + "\n").encode())

    def manifest(self, status: str, error: str | None = None) -> Path:
        doc = {
            "config": self.config.to_dict(False),
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "status": status,
            "stages": self.stages,
        }
        if error is not None:
            doc["error"] = error
        path = self.root / self.manifest_name
        path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
        return path


def _tag(tau: float, alpha: float | None = None, source: str | None = None) -> str:
    s = f"t{tau:g}"
    if alpha is not None:
        s += f"_a{alpha:g}"
    if source is not None:
        s += f"_{source}"
    return s


def derive_seed(root: int, *key: int) -> np.random.SeedSequence:
    """Seed for one unit of work, keyed by (stage, quantile, alpha, source, day ...)."""
    return np.random.SeedSequence(root, spawn_key=tuple(int(k) for k in key))


def _motif_task(args):
    adj, colorings, n_rand, swaps, seed = args
    report, colored = motif_reports(adj, colorings, n_rand, swaps, seed)
    return report, colored


# ---------------------------------------------------------------- stages


@dataclass
class PipelineState:
    returns: Any = None
    spill: dict = field(default_factory=dict)  # tau -> RollingConnectedness
    graphs: dict = field(default_factory=dict)  # (tau, alpha, source) -> list of BackboneGraph
    motifs: dict = field(default_factory=dict)  # (tau, alpha, source) -> list of (report, colored)
    similarity: dict = field(default_factory=dict)  # (tau, alpha, source) -> list of H arrays


def _load_returns(cfg: PipelineConfig):
    if not cfg.inputs:
        raise ConfigError("no input price files configured")
    panel = load_price_panel(cfg.inputs, cfg.policy, cfg.partition)
    return compute_log_returns(panel)


def _stage_ingest(cfg, w: ArtifactWriter, st: PipelineState) -> None:
    rp = st.returns
    w.csv("returns.csv", pd.DataFrame(rp.returns, index=pd.Index(_fmt_dates(rp.dates), name="date"),
                                      columns=rp.symbols), index=True)
    w.csv("stats.csv", stats_table(rp, cfg.adf_lags))


def _stage_connectedness(cfg, w: ArtifactWriter, st: PipelineState) -> None:
    rp = st.returns
    cfg.validate_panel(rp.n_assets)
    partition = rp.labels(cfg.group_scheme)
    equity = [lab == EQUITY for lab in rp.labels(2)]
    has_equity = any(equity) and not all(equity)
    res = rolling_connectedness_modes(
        rp, cfg.window, cfg.p, cfg.quantiles, cfg.horizon, (cfg.mode,), scalar=cfg.scalar,
        partition=partition, equity_tag=equity if has_equity else None, workers=cfg.workers,
    )
    skipped = []
    for tau in cfg.quantiles:
        rc = res[(float(tau), cfg.mode)]
        st.spill[tau] = rc
        t = _tag(tau)
        idx = pd.Index(_fmt_dates(rc.dates), name="date")
        frame = rc.tci_frame()
        frame.index = idx
        w.csv(f"tci_{t}.csv", frame, index=True)
        for name in ("net", "to", "from_"):
            mat = np.array([getattr(s, name) for s in rc.sets]).reshape(len(rc.sets), rp.n_assets)
            w.csv(f"{name.rstrip('_')}_{t}.csv", pd.DataFrame(mat, index=idx, columns=rp.symbols), index=True)
        w.json(f"jsot_{t}.json", {"assets": rp.symbols, "dates": list(idx),
                                  "matrices": [s.jsot for s in rc.sets]})
        w.json(f"npdc_{t}.json", {"assets": rp.symbols, "dates": list(idx),
                                  "matrices": [s.npdc for s in rc.sets]})
        skipped += [(f"{tau:g}", pd.Timestamp(d).strftime("%Y-%m-%d"), e) for d, e in rc.skipped]
    w.csv("skipped_windows.csv", pd.DataFrame(skipped, columns=["tau", "date", "error"]))


def _edge_frame(dates, graphs, labels) -> pd.DataFrame:
    rows = []
    for d, g in zip(_fmt_dates(dates), graphs):
        for s, t, wt, a, b in g.edges:
            rows.append((d, labels[s], labels[t], wt, a, b))
    return pd.DataFrame(rows, columns=["date", "src", "dst", "weight", "alpha_out", "alpha_in"])


def _stage_backbone(cfg, w: ArtifactWriter, st: PipelineState) -> None:
    sym = st.returns.symbols
    for tau in cfg.quantiles:
        rc = st.spill[tau]
        ct = [bb.spillover_edge_weights(s.jsot) for s in rc.sets]
        npdc = [bb.npdc_weights(s.npdc) for s in rc.sets]
        for alpha in cfg.alphas:
            for source, mats in ((bb.CT, ct), (bb.NPDC, npdc)):
                graphs = [bb.extract_backbone(W, alpha, source_kind=source,
                                              keep_degree_one=cfg.keep_degree_one) for W in mats]
                st.graphs[(tau, alpha, source)] = graphs
                w.csv(f"backbone_{_tag(tau, alpha, source)}.csv", _edge_frame(rc.dates, graphs, sym))
        thr = [bb.threshold_filter(W, cfg.threshold_cutoff) for W in ct]
        w.csv(f"threshold_{_tag(tau)}_CT.csv", _edge_frame(rc.dates, thr, sym))


def _colorings(rp, schemes) -> dict[str, list[str]]:
    return {f"c{k}": rp.labels(k) for k in schemes}


def _stage_motifs(cfg, w: ArtifactWriter, st: PipelineState) -> None:
    rp = st.returns
    colorings = _colorings(rp, cfg.color_schemes)
    keys, tasks = [], []
    for qi, tau in enumerate(cfg.quantiles):
        for ai, alpha in enumerate(cfg.alphas):
            for si, source in enumerate(SOURCES):
                for di, g in enumerate(st.graphs[(tau, alpha, source)]):
                    adj = DirectedGraph.from_edges(g.n, zip(g.src.tolist(), g.dst.tolist())).adjacency()
                    seed = derive_seed(cfg.seed, _STAGE_SEED["motifs"], qi, ai, si, di)
                    keys.append((tau, alpha, source))
                    tasks.append((adj, colorings, cfg.n_rand, cfg.swaps_per_edge, seed))
    results = map_tasks(_motif_task, tasks, cfg.workers, chunksize=16)
    for key, res in zip(keys, results):
        st.motifs.setdefault(key, []).append(res)
    orbit_cols = [f"o{k}" for k in range(N_ORBITS)]
    for key, daily in st.motifs.items():
        tau, alpha, source = key
        tag = _tag(tau, alpha, source)
        dates = _fmt_dates(st.spill[tau].dates)
        rows = []
        for d, (rep, _) in zip(dates, daily):
            rows += [{"date": d, **r} for r in rep.rows()]
        w.csv(f"motifs_daily_{tag}.csv", pd.DataFrame(rows, columns=["date", "id", "count", "rnd_mean", "rnd_sd", "z"]))
        table = pd.DataFrame(aggregate_reports([rep for rep, _ in daily]),
                             columns=["id", "mu", "sigma", "mu_rnd", "sigma_rnd", "z"])
        w.csv(f"motifs_table_{tag}.csv", table)
        for name in colorings:
            ctab = aggregate_colored([c[name] for _, c in daily], [rep.n_rand for rep, _ in daily])
            w.csv(f"colored_table_{tag}_{name}.csv",
                  pd.DataFrame(ctab, columns=["id", "colors", "mu", "sigma", "mu_rnd", "sigma_rnd", "z"]))
        orb = []
        for d, (rep, _) in zip(dates, daily):
            for a, row in zip(rp.symbols, rep.orbit_counts):
                orb.append([d, a, *row.tolist()])
        w.csv(f"orbit_counts_{tag}.csv", pd.DataFrame(orb, columns=["date", "asset", *orbit_cols]))


def _stage_orbits(cfg, w: ArtifactWriter, st: PipelineState) -> None:
    rp = st.returns
    n = rp.n_assets
    for key, daily in st.motifs.items():
        tau, alpha, source = key
        tag = _tag(tau, alpha, source)
        rc = st.spill[tau]
        dates = _fmt_dates(rc.dates)
        div, corr, sims, profiles = [], [], [], []
        for d, (rep, _), s in zip(dates, daily, rc.sets):
            P = position_profiles(rep.orbit_counts)
            profiles.append(P)
            dvec = profile_entropy(P)
            div.append(dvec)
            defined = ~np.isnan(dvec)
            if defined.sum() >= 3:
                c = diversity_connectedness_correlation(dvec, {"to": s.to, "from": s.joint_from, "net": s.net})
            else:
                c = {"to": None, "from": None, "net": None}
            corr.append({"date": d, **c})
            if (~np.isnan(P).any(axis=1)).sum() >= 2:
                sims.append(similarity_matrix(P, d, tau, alpha).H)
            else:
                sims.append(np.full((n, n), np.nan))
        st.similarity[key] = sims
        idx = pd.Index(dates, name="date")
        w.csv(f"diversity_{tag}.csv", pd.DataFrame(np.array(div).reshape(len(dates), n), index=idx,
                                                   columns=rp.symbols), index=True)
        w.csv(f"diversity_corr_{tag}.csv", pd.DataFrame(corr, columns=["date", "to", "from", "net"]))
        if sims:
            Hbar, cover = time_average_similarity(sims, cfg.min_coverage)
        else:
            Hbar, cover = np.full((n, n), np.nan), np.zeros((n, n), dtype=int)
        w.json(f"similarity_mean_{tag}.json", {"assets": rp.symbols, "min_coverage": cfg.min_coverage,
                                               "mean": Hbar, "coverage": cover})
        prof = mean_log10_profiles(profiles) if profiles else np.full((n, N_ORBITS), np.nan)
        w.csv(f"profiles_log10_{tag}.csv",
              pd.DataFrame(prof, index=pd.Index(rp.symbols, name="asset"),
                           columns=[f"o{k}" for k in range(N_ORBITS)]), index=True)


def _trailing_similarity(sims: Sequence[np.ndarray], window: int, min_coverage: int) -> list[np.ndarray]:
    S = np.asarray(sims, dtype=float)
    defined = ~np.isnan(S)
    csum = np.concatenate([np.zeros((1,) + S.shape[1:]), np.cumsum(np.where(defined, S, 0.0), axis=0)])
    ccnt = np.concatenate([np.zeros((1,) + S.shape[1:]), np.cumsum(defined, axis=0)])
    out = []
    for t in range(len(S)):
        lo = max(0, t + 1 - window)
        cnt = ccnt[t + 1] - ccnt[lo]
        with np.errstate(invalid="ignore", divide="ignore"):
            m = (csum[t + 1] - csum[lo]) / cnt
        m[cnt < max(1, min_coverage)] = np.nan
        out.append(m)
    return out


def _stage_portfolio(cfg, w: ArtifactWriter, st: PipelineState) -> None:
    rp = st.returns
    groups = rp.labels(cfg.group_scheme)
    cov = rolling_covariance(rp, cfg.window)
    cov_by_date = dict(zip(cov.dates, zip(cov.cov, cov.corr)))
    msp_alphas = [cfg.msp_alpha] if cfg.msp_alpha is not None else list(cfg.alphas)
    perf, cum, gw = [], {}, []
    for tau in cfg.quantiles:
        rc = st.spill[tau]
        mats: dict[str, tuple[list, list]] = {}
        dates = [d for d in rc.dates if d in cov_by_date]
        sets = {d: s for d, s in zip(rc.dates, rc.sets)}
        if cfg.covariance_source == "qvar":
            mats["MVP"] = (list(rc.dates), [s.sigma for s in rc.sets])
        else:
            mats["MVP"] = (dates, [cov_by_date[d][0] for d in dates])
        mats["MCP"] = (dates, [cov_by_date[d][1] for d in dates])
        mats["MCoP"] = (list(rc.dates), [build_pci(sets[d].jsot) for d in rc.dates])
        runs = [(s, None) for s in cfg.strategies if s != "MSP"]
        if "MSP" in cfg.strategies:
            # one structural-similarity portfolio per backbone significance level
            for alpha in msp_alphas:
                sims = st.similarity.get((tau, alpha, cfg.msp_source), [])
                if cfg.msp_average == "trailing" and sims:
                    sims = _trailing_similarity(sims, cfg.window, cfg.min_coverage)
                mats[("MSP", alpha)] = (list(rc.dates)[: len(sims)], [msp_input(H) for H in sims])
                runs.append(("MSP", alpha))
        for strat, alpha in runs:
            d, M = mats[strat] if alpha is None else mats[(strat, alpha)]
            if not M:
                continue
            label = strat if alpha is None else f"{strat}_a{alpha:g}"
            ws = weight_series(strat, tau, d, M)
            w.csv(f"weights_{label}_{_tag(tau)}.csv",
                  ws.frame(rp.symbols).set_axis(pd.Index(_fmt_dates(ws.dates), name="date")), index=True)
            if not ws.dates:
                continue
            rep = backtest(ws, rp, cfg.cvar_level, groups)
            perf.append({"strategy": strat, "alpha": alpha, "tau": tau, **rep.row(), "cvar": rep.cvar,
                         "n_days": len(rep.daily), "ridge_days": int((ws.ridge > 0).sum())})
            cum[f"{label}_{_tag(tau)}"] = rep.cumulative.set_axis(_fmt_dates(rep.cumulative.index))
            gw += [{"strategy": label, "tau": tau, "group": g, "weight": v}
                   for g, v in rep.group_weights.items()]
    w.csv("performance.csv", pd.DataFrame(perf, columns=["strategy", "alpha", "tau", "Return", "StdDev",
                                                         "Sharpe(StdDev)", "Sharpe(CVaR)", "cvar", "n_days",
                                                         "ridge_days"]))
    cframe = pd.DataFrame(cum)
    cframe.index.name = "date"
    w.csv("cumulative.csv", cframe, index=True)
    w.csv("group_weights.csv", pd.DataFrame(gw, columns=["strategy", "tau", "group", "weight"]))


_RUNNERS = {
    "ingest": _stage_ingest,
    "connectedness": _stage_connectedness,
    "backbone": _stage_backbone,
    "motifs": _stage_motifs,
    "orbits": _stage_orbits,
    "portfolio": _stage_portfolio,
}


def run_pipeline(config: PipelineConfig, until: str = "portfolio", returns=None) -> Path:
    """Run the stages up to and including ``until``; returns the manifest path.

    A failing stage leaves the manifest with status "failed" listing the
    files written so far, then re-raises.
    """
    if until not in STAGES:
        raise ConfigError(f"unknown stage {until!r}")
    stages = STAGES[: STAGES.index(until) + 1]
    writer = ArtifactWriter(config.resolve_output(), config)
    st = PipelineState()
    try:
        st.returns = returns if returns is not None else _load_returns(config)
        for stage in stages:
            log.info("stage %s", stage)
            writer.begin(stage)
            _RUNNERS[stage](config, writer, st)
    except Exception as exc:
        writer.manifest("failed", f"{type(exc).__name__}: {exc}")
        raise
    return writer.manifest("complete")


def robustness_compare(config: PipelineConfig, returns=None) -> Path:
    """Generalized vs joint TCI at the main and alternative window lengths."""
    writer = ArtifactWriter(config.resolve_output(), config, "manifest_robustness.json")
    writer.begin("robustness")
    try:
        rp = returns if returns is not None else _load_returns(config)
        windows = (config.window, config.robust_window)
        series = {}
        for win in windows:
            cfg = dataclasses.replace(config, window=win)
            cfg.validate_panel(rp.n_assets)
            res = rolling_connectedness_modes(rp, win, config.p, config.quantiles, config.horizon,
                                              ("generalized", "joint"), scalar=config.scalar,
                                              workers=config.workers)
            for (tau, mode), rc in res.items():
                series[(tau, mode, win)] = pd.Series([s.tci_overall for s in rc.sets],
                                                     index=_fmt_dates(rc.dates))
        summary = []
        for tau in config.quantiles:
            cols = {f"{mode}_w{win}": series[(float(tau), mode, win)]
                    for win in windows for mode in ("generalized", "joint")}
            frame = pd.DataFrame(cols).dropna()
            frame.index.name = "date"
            writer.csv(f"robustness_{_tag(tau)}.csv", frame, index=True)
            for win in windows:
                g, j = frame[f"generalized_w{win}"], frame[f"joint_w{win}"]
                summary.append({"tau": tau, "window": win, "mean_generalized": g.mean(),
                                "mean_joint": j.mean(), "mean_delta": (j - g).mean(),
                                "var_generalized": g.var(ddof=1), "var_joint": j.var(ddof=1)})
        writer.csv("robustness_summary.csv", pd.DataFrame(summary))
    except Exception as exc:
        writer.manifest("failed", f"{type(exc).__name__}: {exc}")
        raise
    return writer.manifest("complete")

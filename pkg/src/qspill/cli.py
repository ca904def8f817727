"""Command-line entry point: ``qspill <verb> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, QSpillError
from .pipeline import OUTPUT_ENV, PipelineConfig, robustness_compare, run_pipeline

# verb -> last pipeline stage it runs
VERBS = {
    "stats": "ingest",
    "connectedness": "connectedness",
    "backbone": "backbone",
    "motifs": "motifs",
    "orbits": "orbits",
    "portfolio": "portfolio",
    "run-all": "portfolio",
}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _strs(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with pipeline settings (flags override it)")
    p.add_argument("--input", dest="inputs", action="append", help="price CSV (repeatable)")
    p.add_argument("--partition", help="asset partition CSV (symbol, sector7, ...)")
    p.add_argument("--policy", help="calendar alignment: intersect | ffill:k")
    p.add_argument("--quantiles", type=_floats, help="e.g. 0.05,0.5,0.95")
    p.add_argument("--window", type=int)
    p.add_argument("--robust-window", dest="robust_window", type=int)
    p.add_argument("--lag", dest="p", type=int, help="QVAR lag order p")
    p.add_argument("--horizon", type=int, help="forecast horizon H")
    p.add_argument("--alphas", type=_floats, help="disparity-filter levels, e.g. 0.05,0.1")
    p.add_argument("--n-rand", dest="n_rand", type=int)
    p.add_argument("--swaps-per-edge", dest="swaps_per_edge", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--strategies", type=_strs, help="subset of MVP,MCP,MCoP,MSP")
    p.add_argument("--mode", choices=["joint", "generalized"])
    p.add_argument("--scalar", choices=["jj", "ii"])
    p.add_argument("--color-schemes", dest="color_schemes", type=_ints)
    p.add_argument("--covariance-source", dest="covariance_source", choices=["sample", "qvar"])
    p.add_argument("--msp-average", dest="msp_average", choices=["trailing", "daily"])
    p.add_argument("--min-coverage", dest="min_coverage", type=int)
    p.add_argument("--output", dest="output_dir", help=f"output directory (default ${OUTPUT_ENV}/qspill_out)")
    p.add_argument("--workers", type=int)


_CONFIG_KEYS = (
    "inputs", "partition", "policy", "quantiles", "window", "robust_window", "p", "horizon",
    "alphas", "n_rand", "swaps_per_edge", "seed", "strategies", "mode", "scalar", "color_schemes",
    "covariance_source", "msp_average", "min_coverage", "output_dir", "workers",
)


def build_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k, None) is not None}
    if args.config:
        return PipelineConfig.from_toml(args.config, **overrides)
    return PipelineConfig.from_dict(overrides)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qspill", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in (*VERBS, "robustness"):
        _add_config_flags(sub.add_parser(verb))
    syn = sub.add_parser("synthetic", help="write a synthetic price panel as CSVs")
    syn.add_argument("directory")
    syn.add_argument("--assets", type=int, default=10)
    syn.add_argument("--days", type=int, default=600)
    syn.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.verb == "synthetic":
            from .synthetic import synthetic_panel, write_panel_csvs

            paths, meta = write_panel_csvs(synthetic_panel(args.assets, args.days, args.seed), args.directory)
            print(f"wrote {len(paths)} price files and {meta}")
            return 0
        cfg = build_config(args)
        if args.verb == "robustness":
            manifest = robustness_compare(cfg)
        else:
            manifest = run_pipeline(cfg, until=VERBS[args.verb])
        print(Path(manifest))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (QSpillError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

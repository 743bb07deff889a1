"""Command-line entry point: ``hodgefast <subcommand> ...``.

Failures print a one-line JSON object to stderr. Usage and configuration
errors exit with status 2, everything else with status 1.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .connectivity import EdgeSet, FilterMatrix
from .errors import HodgeFastError, StageError
from .pipeline import PipelineConfig, run_pipeline, stage_decompose, stage_filter, stage_stats
from .simplicial import build_clique_complex, summary
from .synth import SynthConfig, generate_cohort, write_cohort


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fail(kind, message, code, **extra):
    payload = {"error": kind, "message": message, **extra}
    print(json.dumps(payload), file=sys.stderr)
    return code


class ConfigError(Exception):
    pass


def _read_config(loader, path):
    try:
        return loader(path)
    except (ValueError, TypeError, KeyError, OSError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _load_config(args):
    cfg = _read_config(PipelineConfig.from_json, args.config)
    if getattr(args, "output", None):
        cfg.output = args.output
    if getattr(args, "threads", None):
        cfg.threads = args.threads
    return cfg


def cmd_synth(args):
    cfg = _read_config(SynthConfig.from_json, args.config)
    if args.seed is not None:
        d = cfg.to_dict()
        d["seed"] = args.seed
        cfg = _read_config(SynthConfig.from_dict, d)
    cohort = generate_cohort(cfg, threads=args.threads)
    out = Path(args.output or "synth_out")
    manifest = write_cohort(cohort, out)
    print(json.dumps({"manifest": str(manifest), "participants": len(cohort)}))
    return 0


def cmd_filter(args):
    cfg = _load_config(args)
    res = stage_filter(cfg)
    for band, (_, mask) in res.items():
        print(f"{band}: {len(mask)} edges, threshold {mask.threshold_value:.6g}")
    return 0


def cmd_decompose(args):
    cfg = _load_config(args)
    feats = stage_decompose(cfg)
    print(f"features: {feats.values.shape[0]} bands x {feats.values.shape[1]} windows x "
          f"{feats.values.shape[3]} participants -> {Path(cfg.output) / 'features.csv'}")
    return 0


def cmd_stats(args):
    fdr = args.fdr_family
    out = args.output
    if args.config:
        cfg = _load_config(args)
        fdr = fdr or cfg.fdr_family
        out = out or cfg.output
    results = stage_stats(args.features, fdr or "band_component", out or ".")
    n_sig = sum(r.fdr_p_value < 0.05 for r in results)
    print(f"{len(results)} cells, {n_sig} with FDR p < 0.05")
    return 0


def cmd_pipeline(args):
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    n_sig = sum(r.fdr_p_value < 0.05 for r in report.results)
    print(f"{len(report.results)} cells, {n_sig} with FDR p < 0.05; "
          f"report: {report.artifacts['report']}")
    return 0


def _histogram(values, bins=10):
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    width = max(counts.max(), 1)
    lines = []
    for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
        bar = "#" * int(round(40 * c / width))
        lines.append(f"  [{lo:.1f}, {hi:.1f}) {c:6d} {bar}")
    return lines


def cmd_inspect(args):
    if not args.mask and not args.filter:
        raise UsageError("inspect needs --mask and/or --filter")
    if args.mask:
        mask = EdgeSet.from_json(args.mask)
        s = summary(build_clique_complex(mask))
        tri = "triangle" if s["triangles"] == 1 else "triangles"
        print(f"{s['nodes']} nodes, {s['edges']} edges, {s['triangles']} {tri}, "
              f"β1 = {s['beta1']}")
    if args.filter:
        filt = FilterMatrix.from_csv(args.filter)
        iu = np.triu_indices(filt.n, 1)
        print(f"filter: {filt.n} x {filt.n}, off-diagonal histogram")
        print("\n".join(_histogram(filt.values[iu])))
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "filter": cmd_filter,
    "decompose": cmd_decompose,
    "stats": cmd_stats,
    "pipeline": cmd_pipeline,
    "inspect": cmd_inspect,
}


def build_parser():
    parser = _Parser(prog="hodgefast", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required)
        p.add_argument("--output")
        p.add_argument("--threads", type=int)
        # SUPPRESS keeps a top-level --verbose from being reset by the subcommand
        p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    common(p)
    p.add_argument("--seed", type=int)
    for name, helptext in (("filter", "FAST filter, mask and complex per band"),
                           ("decompose", "flows, Hodge decomposition and features"),
                           ("pipeline", "run every stage")):
        common(sub.add_parser(name, help=helptext))
    p = sub.add_parser("stats", help="group statistics from a feature CSV")
    common(p, config_required=False)
    p.add_argument("--features", required=True)
    p.add_argument("--fdr-family", choices=["band_component", "band", "all"])
    p = sub.add_parser("inspect", help="summarise a mask and/or filter")
    p.add_argument("--mask")
    p.add_argument("--filter")
    p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _fail("UsageError", str(exc), 2)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("UsageError", str(exc), 2)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), 2)
    except StageError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 1
    except HodgeFastError as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    except OSError as exc:
        return _fail("OSError", str(exc), 1)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

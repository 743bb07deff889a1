"""End-to-end orchestration: band filter -> FAST filter -> mask -> flows ->
windows -> clique complex -> Hodge decomposition -> summaries -> statistics.

Each stage can also run on its own from the serialized artifacts of the
previous one (see :func:`stage_filter`, :func:`stage_decompose`,
:func:`stage_stats`); floats are written in shortest round-trip form, so a
staged run reproduces the monolithic one bit for bit.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .connectivity import (
    EdgeSet, EpochAverage, FilterMatrix, NodeFunction, fast_filter, participant_flows,
    percentile_mask, stack_correlation,
)
from .errors import HodgeFastError, StageError, ValidationError
from .hodge import COMPONENTS, HodgeSolver, SolverOptions, SummaryMode, summarize
from .signal_model import (
    bands_from_config, design_bandpass, filter_array, format_float, load_manifest,
    partition_windows,
)
from .simplicial import build_clique_complex
from .stats import FdrFamily, FeatureTable, group_compare, results_to_csv, results_to_json

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class PipelineConfig:
    manifest: str | None = None
    output: str = "hodgefast_out"
    bands: list = None
    n_taps: int = 101
    node_function: str = "dirichlet_energy"
    top_percent: float = 5.0
    n_windows: int = 10
    epoch_average: str = "flows"
    filter_population: str = "all"
    summary_mode: str = "signed_mean"
    fdr_family: str = "band_component"
    solver: dict = field(default_factory=dict)
    threads: int | None = None
    write_components: bool = True
    use_cache: bool = True
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.band_specs = bands_from_config(self.bands)
        if self.bands is None:
            self.bands = [asdict(b) for b in self.band_specs]
        names = [b.name for b in self.band_specs]
        if len(set(names)) != len(names):
            raise ValidationError("band names must be unique")
        try:
            NodeFunction(self.node_function)
            EpochAverage(self.epoch_average)
            SummaryMode(self.summary_mode)
            FdrFamily(self.fdr_family)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        if self.filter_population not in ("all", "controls_only"):
            raise ValidationError(f"unknown filter_population {self.filter_population!r}")
        if not (0 < float(self.top_percent) <= 100):
            raise ValidationError("top_percent must be in (0, 100]")
        if int(self.n_windows) < 1:
            raise ValidationError("n_windows must be positive")
        if int(self.n_taps) < 1 or int(self.n_taps) % 2 == 0:
            raise ValidationError("n_taps must be a positive odd integer")
        if self.threads is not None and int(self.threads) < 1:
            raise ValidationError("threads must be a positive integer")
        if int(self.schema_version) != SCHEMA_VERSION:
            raise ValidationError(
                f"unsupported schema_version {self.schema_version} (expected {SCHEMA_VERSION})"
            )
        self.solver_options = SolverOptions(**(self.solver or {}))

    @classmethod
    def from_dict(cls, d, base_dir=None):
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if base_dir is not None:
            for key in ("manifest", "output"):
                if d.get(key) is not None and not Path(d[key]).is_absolute():
                    d[key] = str(Path(base_dir) / d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
        return cls.from_dict(d, base_dir=path.parent)

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def analysis_dict(self):
        """Settings that affect results (paths and thread count excluded)."""
        d = self.to_dict()
        for k in ("manifest", "output", "threads", "write_components", "use_cache"):
            d.pop(k)
        return d


@dataclass
class RunReport:
    config: dict
    timings_s: dict
    results: list
    artifacts: dict
    version: str
    config_hash: str
    input_hash: str
    status: str = "complete"
    error: dict | None = None

    def to_dict(self):
        d = asdict(self)
        return d

    def write(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, default=str) + "\n")


def _hash_json(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()


def cohort_hash(cohort):
    h = hashlib.sha256()
    h.update(repr(cohort.sample_rate_hz).encode())
    for rec in cohort:
        h.update(rec.participant_id.encode() + b"\0" + rec.group_label.encode() + b"\0")
        for ep in rec.epochs:
            h.update(np.ascontiguousarray(ep.data).tobytes())
    return h.hexdigest()


def _slug(name):
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _pool_map(fn, items, threads):
    items = list(items)
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _guard(stage, entity, fn, *args):
    try:
        return fn(*args)
    except StageError:
        raise
    except HodgeFastError as exc:
        raise StageError(stage, entity, exc) from exc


def _load_cohort(cfg, cohort):
    if cohort is not None:
        return cohort
    if cfg.manifest is None:
        raise ValidationError("config has no manifest and no cohort was given")
    return _guard("load", cfg.manifest, load_manifest, cfg.manifest)


def band_filtered(cohort, band, n_taps, threads=None):
    """Band-filtered ``(n_epochs, n_channels, n_samples)`` stack per participant."""
    if n_taps >= cohort.n_samples:
        raise ValidationError(
            f"n_taps ({n_taps}) must be smaller than n_samples ({cohort.n_samples})"
        )
    h = design_bandpass(band, cohort.sample_rate_hz, n_taps)
    return _pool_map(lambda rec: filter_array(rec.stacked(), h), cohort.recordings, threads)


def _filter_population(cohort, population):
    if population == "controls_only":
        return [i for i, g in enumerate(cohort.groups) if g == "control"]
    return list(range(len(cohort)))


def compute_band_filter(cohort, stacks, population, threads=None):
    """FAST filter of one band from its filtered stacks."""
    idx = _filter_population(cohort, population)

    def corr(i):
        rec = cohort.recordings[i]
        return _guard("filter", f"participant {rec.participant_id!r}",
                      stack_correlation, stacks[i])

    return fast_filter(_pool_map(corr, idx, threads))


def stage_filter(cfg, cohort=None, out_dir=None, stacks_out=None, timings=None):
    """FAST filter, mask and clique complex per band; writes them to ``out_dir``.

    Returns ``{band_name: (FilterMatrix, EdgeSet)}``. If ``stacks_out`` is a
    dict, the band-filtered stacks are stored in it for reuse.
    """
    cohort = _load_cohort(cfg, cohort)
    out_dir = Path(out_dir or cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    chash = cohort_hash(cohort)
    result = {}
    for band in cfg.band_specs:
        t0 = time.perf_counter()
        stacks = _guard("bandpass", f"band {band.name}", band_filtered, cohort, band,
                        int(cfg.n_taps), cfg.threads)
        if stacks_out is not None:
            stacks_out[band.name] = stacks
        key = _hash_json({"input": chash, "band": asdict(band), "n_taps": cfg.n_taps,
                          "population": cfg.filter_population})
        cache = out_dir / "cache" / f"fast_{key[:24]}.csv"
        if cfg.use_cache and cache.exists():
            filt = FilterMatrix.from_csv(cache)
        else:
            filt = compute_band_filter(cohort, stacks, cfg.filter_population, cfg.threads)
            if cfg.use_cache:
                cache.parent.mkdir(exist_ok=True)
                filt.to_csv(cache)
        mask = _guard("mask", f"band {band.name}", percentile_mask, filt,
                      float(cfg.top_percent))
        cx = build_clique_complex(mask)
        slug = _slug(band.name)
        filt.to_csv(out_dir / f"filter_{slug}.csv")
        mask.to_json(out_dir / f"mask_{slug}.json")
        cx.to_json(out_dir / f"complex_{slug}.json")
        result[band.name] = (filt, mask)
        if timings is not None:
            timings[f"filter:{band.name}"] = time.perf_counter() - t0
    return result


def load_filter_artifacts(cfg, out_dir=None):
    out_dir = Path(out_dir or cfg.output)
    result = {}
    for band in cfg.band_specs:
        slug = _slug(band.name)
        try:
            filt = FilterMatrix.from_csv(out_dir / f"filter_{slug}.csv")
            mask = EdgeSet.from_json(out_dir / f"mask_{slug}.json")
        except OSError as exc:
            raise StageError("decompose", f"band {band.name}",
                             ValidationError(f"missing filter artifact: {exc}")) from exc
        result[band.name] = (filt, mask)
    return result


def _decompose_participant(args):
    (stack, filt, mask, solver, windows, cfg) = args
    flows = participant_flows(stack, filt, mask, cfg.node_function, windows,
                              epoch_average=cfg.epoch_average)
    comps = solver.decompose(flows)
    summary = np.stack([summarize(comps[c], cfg.summary_mode) for c in COMPONENTS], axis=1)
    return summary, comps


def stage_decompose(cfg, cohort=None, filters=None, stacks=None, out_dir=None, timings=None):
    """Per-participant flows, decomposition and per-window summaries.

    Writes ``features.csv`` (and ``components.csv`` when enabled) and
    returns the :class:`~hodgefast.stats.FeatureTable`.
    """
    cohort = _load_cohort(cfg, cohort)
    out_dir = Path(out_dir or cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    if filters is None:
        filters = load_filter_artifacts(cfg, out_dir)
    windows = _guard("windows", "cohort", partition_windows, cohort.n_samples,
                     int(cfg.n_windows))
    n_p = len(cohort)
    values = np.empty((len(cfg.band_specs), windows.n_windows, len(COMPONENTS), n_p))
    trace_lines = ["freq_band,participant_id,window_index,edge_i,edge_j,gradient,curl,harmonic"]
    for b, band in enumerate(cfg.band_specs):
        t0 = time.perf_counter()
        filt, mask = filters[band.name]
        band_stacks = stacks.get(band.name) if stacks else None
        if band_stacks is None:
            band_stacks = _guard("bandpass", f"band {band.name}", band_filtered, cohort,
                                 band, int(cfg.n_taps), cfg.threads)
        cx = build_clique_complex(mask)
        solver = HodgeSolver(cx, cfg.solver_options)

        def task(i, band=band, filt=filt, mask=mask, solver=solver, band_stacks=band_stacks):
            rec = cohort.recordings[i]
            return _guard("decompose", f"band {band.name}, participant {rec.participant_id!r}",
                          _decompose_participant,
                          (band_stacks[i], filt, mask, solver, windows, cfg))

        outs = _pool_map(task, range(n_p), cfg.threads)
        for i, (summary, comps) in enumerate(outs):
            values[b, :, :, i] = summary
            if cfg.write_components:
                pid = cohort.recordings[i].participant_id
                for w in range(windows.n_windows):
                    for e, (ei, ej) in enumerate(mask.edges):
                        trace_lines.append(",".join([
                            band.name, pid, str(w), str(int(ei)), str(int(ej)),
                            format_float(comps["gradient"][w, e]),
                            format_float(comps["curl"][w, e]),
                            format_float(comps["harmonic"][w, e]),
                        ]))
        if timings is not None:
            timings[f"decompose:{band.name}"] = time.perf_counter() - t0
    features = FeatureTable(
        bands=tuple(b.name for b in cfg.band_specs),
        window_times_s=tuple(windows.times_s(cohort.sample_rate_hz)),
        components=COMPONENTS,
        participant_ids=tuple(cohort.participant_ids),
        groups=tuple(cohort.groups),
        values=values,
    )
    features.to_csv(out_dir / "features.csv")
    if cfg.write_components:
        (out_dir / "components.csv").write_text("\n".join(trace_lines) + "\n")
    return features


def stage_stats(features, fdr_family="band_component", out_dir="."):
    """Group statistics; writes ``results.csv`` and ``results.json``."""
    if not isinstance(features, FeatureTable):
        features = _guard("stats", str(features), FeatureTable.from_csv, features)
    results = _guard("stats", "feature table", group_compare, features, fdr_family)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_to_csv(results, out_dir / "results.csv")
    results_to_json(results, out_dir / "results.json")
    return results


def run_pipeline(cfg, cohort=None):
    """Run every stage and write all artifacts plus ``report.json``.

    On failure a report with ``status: "incomplete"`` is written before the
    :class:`~hodgefast.errors.StageError` propagates.
    """
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = {}
    artifacts = {}
    report = RunReport(
        config=cfg.to_dict(), timings_s=timings, results=[], artifacts=artifacts,
        version=__version__, config_hash=_hash_json(cfg.analysis_dict()), input_hash="",
    )
    t_all = time.perf_counter()
    try:
        t0 = time.perf_counter()
        cohort = _load_cohort(cfg, cohort)
        timings["load"] = time.perf_counter() - t0
        report.input_hash = cohort_hash(cohort)
        stacks = {}
        filters = stage_filter(cfg, cohort, out_dir, stacks_out=stacks, timings=timings)
        for band in cfg.band_specs:
            slug = _slug(band.name)
            for kind in ("filter", "mask", "complex"):
                ext = "csv" if kind == "filter" else "json"
                artifacts[f"{kind}:{band.name}"] = str(out_dir / f"{kind}_{slug}.{ext}")
        features = stage_decompose(cfg, cohort, filters, stacks, out_dir, timings=timings)
        stacks.clear()
        artifacts["features"] = str(out_dir / "features.csv")
        if cfg.write_components:
            artifacts["components"] = str(out_dir / "components.csv")
        t0 = time.perf_counter()
        results = stage_stats(features, cfg.fdr_family, out_dir)
        timings["stats"] = time.perf_counter() - t0
        artifacts["results_csv"] = str(out_dir / "results.csv")
        artifacts["results_json"] = str(out_dir / "results.json")
        report.results = results
    except StageError as exc:
        report.status = "incomplete"
        report.error = exc.to_dict()
        report.write(out_dir / "report.json")
        raise
    timings["total"] = time.perf_counter() - t_all
    artifacts["report"] = str(out_dir / "report.json")
    report.write(out_dir / "report.json")
    return report

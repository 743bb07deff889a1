"""Group comparison: Wilcoxon rank-sum, Benjamini-Hochberg and Cohen's d."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import DegenerateVarianceError, InvalidParameterError, ValidationError
from .signal_model import GROUPS, format_float

EXACT_MAX_N = 12

RESULT_COLUMNS = (
    "freq_band", "time_window_start_s", "time_window_end_s", "p_value",
    "fdr_p_value", "effect_size", "component", "rank_sum_statistic",
)
FEATURE_COLUMNS = (
    "freq_band", "window_index", "time_window_start_s", "time_window_end_s",
    "component", "participant_id", "group", "value",
)


def _exact_two_sided(doubled_ranks, n1, observed):
    """Exact two-sided p of a doubled rank sum by subset-sum counting.

    ``counts[k][s]`` is the number of size-``k`` subsets of the pooled
    (doubled, hence integer) midranks whose sum is ``s``.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros((n1 + 1, total + 1), dtype=object)
    counts[0, 0] = 1
    for r in doubled_ranks.astype(np.int64):
        for k in range(n1, 0, -1):
            counts[k, r:] = counts[k, r:] + counts[k - 1, : total + 1 - r]
    dist = counts[n1]
    n = doubled_ranks.size
    centre = n1 * (n + 1)  # doubled expected rank sum
    dev = abs(observed - centre)
    s = np.arange(total + 1)
    extreme = np.abs(s - centre) >= dev
    return float(sum(dist[extreme]) / math.comb(n, n1))


def wilcoxon_rank_sum(a, b, method="auto"):
    """Two-sided Wilcoxon rank-sum test.

    Returns ``(statistic, p_value)`` where ``statistic`` is the sum of the
    (mid)ranks of ``a`` in the pooled sample.

    ``method`` is ``'exact'`` (enumerate the rank-sum distribution),
    ``'normal_approx'`` (tie-corrected variance with continuity correction)
    or ``'auto'`` (exact when ``len(a) + len(b) <= 12``).
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise InvalidParameterError("both groups need at least one value")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValidationError("rank-sum test needs finite values")
    if method not in ("exact", "normal_approx", "auto"):
        raise InvalidParameterError(f"unknown method {method!r}")
    n1, n2 = a.size, b.size
    n = n1 + n2
    ranks = rankdata(np.concatenate([a, b]))
    w = float(ranks[:n1].sum())
    if np.all(ranks == ranks[0]):
        return w, 1.0
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal_approx"
    if method == "exact":
        doubled = np.rint(2 * ranks).astype(np.int64)
        p = _exact_two_sided(doubled, n1, int(doubled[:n1].sum()))
        return w, min(1.0, p)

    _, ties = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(ties.astype(np.float64) ** 3 - ties)) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return w, 1.0
    dev = max(abs(w - n1 * (n + 1) / 2.0) - 0.5, 0.0)
    z = dev / math.sqrt(var)
    return w, min(1.0, math.erfc(z / math.sqrt(2.0)))


def benjamini_hochberg(p_values):
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=np.float64).ravel()
    if p.size == 0:
        return p.copy()
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValidationError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adj, 1.0)
    # never below the raw value, even after rounding
    return np.maximum(out, p)


def cohens_d(control, patient):
    """``(mean(control) - mean(patient)) / pooled_sd``; negative when patients are larger."""
    c = np.asarray(control, dtype=np.float64).ravel()
    p = np.asarray(patient, dtype=np.float64).ravel()
    if c.size < 2 or p.size < 2:
        raise InvalidParameterError("Cohen's d needs at least two values per group")
    pooled = ((c.size - 1) * c.var(ddof=1) + (p.size - 1) * p.var(ddof=1)) / (
        c.size + p.size - 2
    )
    if not pooled > 0:
        raise DegenerateVarianceError("pooled variance is zero")
    return float((c.mean() - p.mean()) / math.sqrt(pooled))


class FdrFamily(str, Enum):
    # one family per (band, component), spanning windows
    BAND_COMPONENT = "band_component"
    # one family per band, spanning every (window, component) cell
    BAND = "band"
    # a single family over every cell of the run
    ALL = "all"


@dataclass(frozen=True)
class FeatureTable:
    """Complete grid of per-participant scalars.

    ``values`` has shape ``(n_bands, n_windows, n_components, n_participants)``.
    """

    bands: tuple
    window_times_s: tuple
    components: tuple
    participant_ids: tuple
    groups: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        shape = (len(self.bands), len(self.window_times_s), len(self.components),
                 len(self.participant_ids))
        if v.shape != shape:
            raise ValidationError(f"feature grid has shape {v.shape}, expected {shape}")
        if len(self.groups) != len(self.participant_ids):
            raise ValidationError("one group label per participant is required")
        bad = set(self.groups) - set(GROUPS)
        if bad:
            raise ValidationError(f"unknown group labels {sorted(bad)}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("feature table has non-finite values")
        object.__setattr__(self, "values", v)

    def to_csv(self, path):
        rows = [",".join(FEATURE_COLUMNS)]
        for bi, band in enumerate(self.bands):
            for w, (t0, t1) in enumerate(self.window_times_s):
                for ci, comp in enumerate(self.components):
                    for pi, pid in enumerate(self.participant_ids):
                        rows.append(",".join([
                            band, str(w), format_float(t0), format_float(t1), comp,
                            pid, self.groups[pi], format_float(self.values[bi, w, ci, pi]),
                        ]))
        Path(path).write_text("\n".join(rows) + "\n")

    @classmethod
    def from_csv(cls, path):
        """Read a long-format feature CSV; the grid must be complete."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = set(FEATURE_COLUMNS) - set(reader.fieldnames or ())
            if missing:
                raise ValidationError(f"feature CSV lacks columns {sorted(missing)}")
            records = list(reader)
        bands, comps, pids, groups, times = [], [], [], {}, {}
        for r in records:
            if r["freq_band"] not in bands:
                bands.append(r["freq_band"])
            if r["component"] not in comps:
                comps.append(r["component"])
            if r["participant_id"] not in groups:
                pids.append(r["participant_id"])
                groups[r["participant_id"]] = r["group"]
            w = int(r["window_index"])
            times[w] = (float(r["time_window_start_s"]), float(r["time_window_end_s"]))
        n_w = len(times)
        if sorted(times) != list(range(n_w)):
            raise ValidationError("window indices must be 0..n_windows-1")
        vals = np.full((len(bands), n_w, len(comps), len(pids)), np.nan)
        bidx = {b: i for i, b in enumerate(bands)}
        cidx = {c: i for i, c in enumerate(comps)}
        pidx = {p: i for i, p in enumerate(pids)}
        for r in records:
            vals[bidx[r["freq_band"]], int(r["window_index"]), cidx[r["component"]],
                 pidx[r["participant_id"]]] = float(r["value"])
        if np.isnan(vals).any():
            raise ValidationError("feature table is incomplete")
        return cls(tuple(bands), tuple(times[w] for w in range(n_w)), tuple(comps),
                   tuple(pids), tuple(groups[p] for p in pids), vals)


@dataclass(frozen=True)
class StatResult:
    band: str
    window_index: int
    window_start_s: float
    window_end_s: float
    component: str
    p_value: float
    fdr_p_value: float
    effect_size: float
    rank_sum_statistic: float


def _effect_size(c, p):
    try:
        return cohens_d(c, p)
    except DegenerateVarianceError:
        # e.g. a triangle-free complex makes every curl value exactly zero
        diff = float(np.mean(c) - np.mean(p))
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)


def group_compare(features, fdr_family="band_component", method="auto"):
    """One :class:`StatResult` per (band, window, component) cell.

    Control values are the first sample of the rank-sum test and the
    minuend of Cohen's d. Results are ordered by band (table order), window,
    then component.
    """
    fdr_family = FdrFamily(fdr_family)
    groups = np.asarray(features.groups)
    is_c = groups == "control"
    is_p = groups == "patient"
    if not is_c.any() or not is_p.any():
        raise ValidationError("both groups are required for comparison")
    nb, nw, nc, _ = features.values.shape
    p_raw = np.empty((nb, nw, nc))
    stat = np.empty((nb, nw, nc))
    eff = np.empty((nb, nw, nc))
    for b in range(nb):
        for w in range(nw):
            for c in range(nc):
                v = features.values[b, w, c]
                stat[b, w, c], p_raw[b, w, c] = wilcoxon_rank_sum(v[is_c], v[is_p], method)
                eff[b, w, c] = _effect_size(v[is_c], v[is_p])
    p_fdr = np.empty_like(p_raw)
    if fdr_family is FdrFamily.ALL:
        p_fdr[...] = benjamini_hochberg(p_raw.ravel()).reshape(p_raw.shape)
    elif fdr_family is FdrFamily.BAND:
        for b in range(nb):
            p_fdr[b] = benjamini_hochberg(p_raw[b].ravel()).reshape(nw, nc)
    else:
        for b in range(nb):
            for c in range(nc):
                p_fdr[b, :, c] = benjamini_hochberg(p_raw[b, :, c])
    out = []
    for b in range(nb):
        for w in range(nw):
            t0, t1 = features.window_times_s[w]
            for c in range(nc):
                out.append(StatResult(
                    band=features.bands[b], window_index=w, window_start_s=t0,
                    window_end_s=t1, component=features.components[c],
                    p_value=float(p_raw[b, w, c]), fdr_p_value=float(p_fdr[b, w, c]),
                    effect_size=float(eff[b, w, c]),
                    rank_sum_statistic=float(stat[b, w, c]),
                ))
    return out


def results_to_csv(results, path):
    rows = [",".join(RESULT_COLUMNS)]
    for r in results:
        rows.append(",".join([
            r.band, format_float(r.window_start_s), format_float(r.window_end_s),
            format_float(r.p_value), format_float(r.fdr_p_value),
            format_float(r.effect_size), r.component, format_float(r.rank_sum_statistic),
        ]))
    Path(path).write_text("\n".join(rows) + "\n")


def results_to_json(results, path):
    Path(path).write_text(json.dumps([asdict(r) for r in results], indent=1) + "\n")

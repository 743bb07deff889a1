"""FAST long-term filter, percentile mask and filtered edge flows."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import kernels
from .errors import DegenerateChannelError, InvalidParameterError, ValidationError
from .signal_model import format_float


class NodeFunction(str, Enum):
    DIRICHLET_ENERGY = "dirichlet_energy"
    INSTANTANEOUS_CORRELATION = "instantaneous_correlation"

    @property
    def kernel_mode(self):
        if self is NodeFunction.DIRICHLET_ENERGY:
            return kernels.DIRICHLET
        return kernels.CORRELATION


@dataclass(frozen=True)
class FilterMatrix:
    """Symmetric ``n x n`` matrix with entries in ``[0, 1]`` and zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValidationError(f"filter matrix must be square, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("filter matrix has non-finite entries")
        if not np.array_equal(v, v.T):
            raise ValidationError("filter matrix is not symmetric")
        if v.min(initial=0.0) < 0.0 or v.max(initial=0.0) > 1.0:
            raise ValidationError("filter matrix entries must lie in [0, 1]")
        if np.any(np.diag(v) != 0.0):
            raise ValidationError("filter matrix diagonal must be zero")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self):
        return self.values.shape[0]

    def to_csv(self, path):
        lines = [",".join(format_float(x) for x in row) for row in self.values]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path):
        return cls(np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2))


@dataclass(frozen=True)
class EdgeSet:
    """The sparsifying mask: lexicographically sorted ``(i, j)`` with ``i < j``."""

    n_nodes: int
    edges: np.ndarray
    threshold_value: float

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if np.any(e[:, 0] >= e[:, 1]) or e.min() < 0 or e.max() >= self.n_nodes:
                raise ValidationError("edges must satisfy 0 <= i < j < n_nodes")
            keys = e[:, 0] * self.n_nodes + e[:, 1]
            if np.any(np.diff(keys) <= 0):
                raise ValidationError("edges must be sorted and duplicate-free")
        e = np.ascontiguousarray(e)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        object.__setattr__(self, "threshold_value", float(self.threshold_value))

    def __len__(self):
        return self.edges.shape[0]

    def to_dict(self):
        return {
            "n_nodes": self.n_nodes,
            "threshold_value": self.threshold_value,
            "edges": [[int(i), int(j)] for i, j in self.edges],
        }

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_nodes"]), np.array(d["edges"], dtype=np.int64).reshape(-1, 2),
                   float(d.get("threshold_value", 0.0)))

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class EdgeFlowSeries:
    """``values`` is ``(n_steps, n_edges)``, columns in mask edge order."""

    values: np.ndarray
    edges: np.ndarray

    @property
    def n_steps(self):
        return self.values.shape[0]


def _sym_upper(mat):
    iu = np.triu_indices(mat.shape[0], 1)
    out = np.zeros_like(mat)
    out[iu] = mat[iu]
    return out + out.T


def abs_correlation(stack):
    """Per-epoch ``|Pearson|`` matrices, shape ``(n_epochs, n, n)``.

    Raises :class:`DegenerateChannelError` for a zero-variance channel.
    """
    x = stack - stack.mean(axis=-1, keepdims=True)
    norms = np.sqrt(np.einsum("ect,ect->ec", x, x))
    flat = np.ptp(stack, axis=-1) == 0.0
    bad = np.argwhere(flat | (norms == 0.0))
    if bad.size:
        ep, ch = (int(v) for v in bad[0])
        raise DegenerateChannelError(
            f"channel {ch} has zero variance in epoch {ep}", channel=ch, epoch=ep
        )
    r = np.einsum("ect,edt->ecd", x, x) / (norms[:, :, None] * norms[:, None, :])
    return np.minimum(np.abs(r), 1.0)


def stack_correlation(stack):
    """Mean over epochs of ``|Pearson|``; ``stack`` is ``(n_epochs, n, n_samples)``."""
    return FilterMatrix(_sym_upper(abs_correlation(stack).mean(axis=0)))


def participant_correlation(recording):
    """Mean over epochs of ``|Pearson|`` between every channel pair."""
    try:
        return stack_correlation(recording.stacked())
    except DegenerateChannelError as exc:
        raise DegenerateChannelError(
            f"participant {recording.participant_id!r}: {exc}",
            channel=exc.channel, epoch=exc.epoch,
        ) from None


def fast_filter(correlations):
    """Element-wise mean of per-participant filter matrices."""
    correlations = list(correlations)
    if not correlations:
        raise InvalidParameterError("need at least one correlation matrix")
    n = correlations[0].n
    if any(c.n != n for c in correlations):
        raise InvalidParameterError("correlation matrices differ in size")
    acc = np.zeros((n, n))
    for c in correlations:
        acc += c.values
    mean = _sym_upper(acc / len(correlations))
    # rounding may push the mean a hair outside the inputs' envelope
    lo = np.minimum.reduce([c.values for c in correlations])
    hi = np.maximum.reduce([c.values for c in correlations])
    return FilterMatrix(np.clip(mean, lo, hi))


def n_retained(n_nodes, top_percent):
    m = n_nodes * (n_nodes - 1) // 2
    # round() guards against 0.1-style float error making an integer product
    # land just above the integer
    return min(m, math.ceil(round(m * top_percent / 100.0, 9)))


def percentile_mask(filt, top_percent):
    """Keep the ``ceil(m * top_percent / 100)`` strongest pairs.

    Ties at the threshold go to the lexicographically smaller pair, so
    exactly that many edges are kept.
    """
    if not (0.0 < top_percent <= 100.0):
        raise InvalidParameterError(f"top_percent must be in (0, 100], got {top_percent}")
    n = filt.n
    if n < 2:
        raise InvalidParameterError("filter has no off-diagonal entries")
    iu, ju = np.triu_indices(n, 1)
    vals = filt.values[iu, ju]
    k = n_retained(n, top_percent)
    order = np.lexsort((np.arange(vals.size), -vals))
    keep = np.sort(order[:k])
    return EdgeSet(n, np.column_stack([iu[keep], ju[keep]]), float(vals[keep].min()))


def _check_shapes(n_channels, filt, mask):
    if filt.n != n_channels:
        raise ValidationError(
            f"epoch has {n_channels} channels but filter is {filt.n}x{filt.n}"
        )
    if mask.n_nodes != filt.n:
        raise ValidationError("mask node count does not match filter size")


def masked_flow_series(epoch, filt, mask, fn):
    """Instantaneous filtered flow on every mask edge, one row per sample."""
    fn = NodeFunction(fn)
    _check_shapes(epoch.n_channels, filt, mask)
    i, j = mask.edges[:, 0], mask.edges[:, 1]
    w = filt.values[i, j]
    x = epoch.data
    if fn is NodeFunction.DIRICHLET_ENERGY:
        vals = w * (x[i] - x[j]).T ** 2
    else:
        xc = x - x.mean(axis=1, keepdims=True)
        vals = w * np.abs(xc[i] * xc[j]).T
    return EdgeFlowSeries(vals, mask.edges)


def window_average(series, windows):
    """Row ``k`` of the result is the mean of ``series`` rows in window ``k``."""
    n = series.n_steps
    rows = []
    for s, e in windows.bounds:
        if e <= s:
            raise InvalidParameterError(f"empty window [{s}, {e})")
        if s < 0 or e > n:
            raise InvalidParameterError(f"window [{s}, {e}) outside series of length {n}")
        rows.append(series.values[s:e].mean(axis=0))
    return EdgeFlowSeries(np.array(rows).reshape(len(rows), -1), series.edges)


class EpochAverage(str, Enum):
    # average window-level flows across epochs
    FLOWS = "flows"
    # average the epoch signals into an evoked response first
    SIGNALS = "signals"


def participant_flows(stack, filt, mask, fn, windows, epoch_average="flows", backend=None):
    """Windowed filtered flows of one participant's epochs.

    ``stack`` is ``(n_epochs, n_channels, n_samples)``. Returns
    ``(n_windows, n_edges)``.
    """
    fn = NodeFunction(fn)
    epoch_average = EpochAverage(epoch_average)
    _check_shapes(stack.shape[1], filt, mask)
    k = kernels.get_backend(backend)
    x = np.asarray(stack, dtype=np.float64)
    if epoch_average is EpochAverage.SIGNALS:
        x = x.mean(axis=0, keepdims=True)
    if fn is NodeFunction.INSTANTANEOUS_CORRELATION:
        x = x - x.mean(axis=-1, keepdims=True)
    x = np.ascontiguousarray(x)
    ei = np.ascontiguousarray(mask.edges[:, 0])
    ej = np.ascontiguousarray(mask.edges[:, 1])
    w = np.ascontiguousarray(filt.values[ei, ej])
    if ei.size == 0:
        return np.zeros((windows.n_windows, 0))
    return k.windowed_flows(x, ei, ej, w, windows.starts, windows.ends, fn.kernel_mode)


def per_epoch_flow(recordings, filt, mask, fn, windows, epoch_average="flows", backend=None):
    """One ``(n_windows, n_edges)`` flow series per participant."""
    out = []
    for rec in recordings:
        vals = participant_flows(rec.stacked(), filt, mask, fn, windows,
                                 epoch_average=epoch_average, backend=backend)
        out.append(EdgeFlowSeries(vals, mask.edges))
    return out

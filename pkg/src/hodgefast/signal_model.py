"""Epochs, cohorts, frequency bands and analysis windows."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import convolve1d

from .errors import InvalidBandError, InvalidParameterError, ValidationError

GROUPS = ("control", "patient")

# Delta's nominal 0 Hz edge would pass DC straight into the Dirichlet energy.
MIN_LOW_HZ = 0.5

DEFAULT_BANDS = (
    ("delta", 0.0, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 12.0),
    ("beta", 12.0, 16.0),
)


@dataclass(frozen=True)
class Epoch:
    """One trial: ``data`` is ``(n_channels, n_samples)``."""

    data: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValidationError(f"epoch data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 2 or data.shape[1] < 2:
            raise ValidationError(
                f"epoch needs >= 2 channels and >= 2 samples, got {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise ValidationError("epoch contains non-finite values")
        if not self.sample_rate_hz > 0:
            raise ValidationError("sample_rate_hz must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def n_samples(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class ParticipantRecording:
    participant_id: str
    group_label: str
    epochs: tuple

    def __post_init__(self):
        if self.group_label not in GROUPS:
            raise ValidationError(
                f"participant {self.participant_id}: unknown group {self.group_label!r}"
            )
        epochs = tuple(self.epochs)
        if not epochs:
            raise ValidationError(f"participant {self.participant_id} has no epochs")
        shape = epochs[0].data.shape
        for k, ep in enumerate(epochs):
            if ep.data.shape != shape:
                raise ValidationError(
                    f"participant {self.participant_id}, epoch {k}: shape "
                    f"{ep.data.shape} differs from {shape}"
                )
        object.__setattr__(self, "epochs", epochs)

    def stacked(self):
        """Epoch data as one ``(n_epochs, n_channels, n_samples)`` array."""
        return np.stack([ep.data for ep in self.epochs])


@dataclass(frozen=True)
class BandSpec:
    name: str
    low_hz: float
    high_hz: float

    def validate(self, sample_rate_hz):
        nyq = sample_rate_hz / 2.0
        if not (0.0 <= self.low_hz < self.high_hz):
            raise InvalidBandError(
                f"band {self.name}: need 0 <= low < high, got "
                f"[{self.low_hz}, {self.high_hz}]"
            )
        if self.high_hz >= nyq:
            raise InvalidBandError(
                f"band {self.name}: high edge {self.high_hz} Hz >= Nyquist {nyq} Hz"
            )

    @property
    def effective_low_hz(self):
        return max(self.low_hz, MIN_LOW_HZ)


@dataclass(frozen=True)
class WindowSpec:
    n_windows: int
    bounds: tuple

    @property
    def starts(self):
        return np.array([b[0] for b in self.bounds], dtype=np.int64)

    @property
    def ends(self):
        return np.array([b[1] for b in self.bounds], dtype=np.int64)

    def times_s(self, sample_rate_hz):
        """``(start_s, end_s)`` per window."""
        return [(s / sample_rate_hz, e / sample_rate_hz) for s, e in self.bounds]


def _lowpass(cutoff, sample_rate_hz, n_taps):
    n = np.arange(n_taps) - (n_taps - 1) // 2
    fc = cutoff / sample_rate_hz
    h = 2.0 * fc * np.sinc(2.0 * fc * n) * np.hamming(n_taps)
    return h / h.sum()


def design_bandpass(band, sample_rate_hz, n_taps=101):
    """Symmetric Hamming-windowed sinc band-pass kernel.

    The kernel is the difference of two unit-DC low-pass kernels, so its DC
    gain is exactly zero, then scaled to unit gain at the band centre.
    """
    if n_taps < 1 or n_taps % 2 == 0:
        raise InvalidParameterError(f"n_taps must be odd and positive, got {n_taps}")
    band.validate(sample_rate_hz)
    low = band.effective_low_hz
    if low >= band.high_hz:
        raise InvalidBandError(f"band {band.name} is empty after clamping low edge")
    h = _lowpass(band.high_hz, sample_rate_hz, n_taps) - _lowpass(
        low, sample_rate_hz, n_taps
    )
    centre = 0.5 * (low + band.high_hz)
    n = np.arange(n_taps) - (n_taps - 1) // 2
    gain = abs(np.sum(h * np.exp(-2j * np.pi * centre / sample_rate_hz * n)))
    return h / gain


def filter_array(data, kernel):
    """Centred convolution along the last axis with reflection padding."""
    # 'mirror' reflects about the edge sample (d c b | a b c d | c b a),
    # the same as np.pad(mode="reflect"); the kernel is symmetric so
    # correlation and convolution coincide.
    return convolve1d(np.asarray(data, dtype=np.float64), kernel, axis=-1, mode="mirror")


def bandpass_filter(epoch, band, n_taps=101):
    """Zero-phase FIR band-pass of every channel of ``epoch``."""
    if n_taps % 2 == 0 or n_taps < 1:
        raise InvalidParameterError(f"n_taps must be odd and positive, got {n_taps}")
    if n_taps >= epoch.n_samples:
        raise InvalidParameterError(
            f"n_taps ({n_taps}) must be smaller than n_samples ({epoch.n_samples})"
        )
    h = design_bandpass(band, epoch.sample_rate_hz, n_taps)
    return Epoch(filter_array(epoch.data, h), epoch.sample_rate_hz)


def partition_windows(n_samples, n_windows):
    """Split ``[0, n_samples)`` into ``n_windows`` contiguous blocks.

    Window ``k`` is ``[round(k*n/w), round((k+1)*n/w))`` with halves
    rounded up, evaluated in exact integer arithmetic.
    """
    if n_windows < 1 or n_samples < 1:
        raise InvalidParameterError("n_samples and n_windows must be positive")
    if n_windows > n_samples:
        raise InvalidParameterError(
            f"n_windows ({n_windows}) exceeds n_samples ({n_samples})"
        )
    edges = [(2 * k * n_samples + n_windows) // (2 * n_windows)
             for k in range(n_windows + 1)]
    bounds = tuple((edges[k], edges[k + 1]) for k in range(n_windows))
    return WindowSpec(n_windows=n_windows, bounds=bounds)


@dataclass(frozen=True)
class Cohort:
    """A validated list of recordings sharing one geometry."""

    recordings: tuple
    n_channels: int
    n_samples: int
    sample_rate_hz: float

    @property
    def participant_ids(self):
        return [r.participant_id for r in self.recordings]

    @property
    def groups(self):
        return [r.group_label for r in self.recordings]

    def __len__(self):
        return len(self.recordings)

    def __iter__(self):
        return iter(self.recordings)


def validate_cohort(recordings):
    """Check that a cohort is analysable and return it as a :class:`Cohort`.

    Raises
    ------
    ValidationError
        On shape or sample-rate mismatch, duplicate ids, non-finite values
        or when either group is missing. The message names the participant
        and epoch at fault.
    """
    recordings = tuple(recordings)
    if not recordings:
        raise ValidationError("cohort is empty")
    ref = recordings[0].epochs[0]
    seen = set()
    for rec in recordings:
        if rec.participant_id in seen:
            raise ValidationError(f"duplicate participant id {rec.participant_id!r}")
        seen.add(rec.participant_id)
        for k, ep in enumerate(rec.epochs):
            where = f"participant {rec.participant_id!r}, epoch {k}"
            if ep.n_channels != ref.n_channels:
                raise ValidationError(
                    f"{where}: {ep.n_channels} channels, expected {ref.n_channels}"
                )
            if ep.n_samples != ref.n_samples:
                raise ValidationError(
                    f"{where}: {ep.n_samples} samples, expected {ref.n_samples}"
                )
            if ep.sample_rate_hz != ref.sample_rate_hz:
                raise ValidationError(
                    f"{where}: sample rate {ep.sample_rate_hz}, expected "
                    f"{ref.sample_rate_hz}"
                )
            if not np.all(np.isfinite(ep.data)):
                raise ValidationError(f"{where}: non-finite values")
    present = {r.group_label for r in recordings}
    missing = [g for g in GROUPS if g not in present]
    if missing:
        raise ValidationError(f"cohort has no participants in group(s): {missing}")
    return Cohort(
        recordings=recordings,
        n_channels=ref.n_channels,
        n_samples=ref.n_samples,
        sample_rate_hz=ref.sample_rate_hz,
    )


# --- CSV / manifest I/O ----------------------------------------------------

def format_float(x):
    """Shortest string that round-trips to the same double."""
    return repr(float(x))


def write_epoch_csv(path, data):
    lines = [",".join(format_float(v) for v in row) for row in np.asarray(data)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_epoch_csv(path):
    data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return data


def write_manifest(path, cohort_or_recordings, epoch_dir="epochs"):
    """Write a cohort as one CSV per epoch plus a JSON manifest."""
    path = Path(path)
    root = path.parent
    (root / epoch_dir).mkdir(parents=True, exist_ok=True)
    recs = list(cohort_or_recordings)
    participants = []
    rate = None
    for rec in recs:
        files = []
        for k, ep in enumerate(rec.epochs):
            rel = f"{epoch_dir}/{rec.participant_id}_e{k:03d}.csv"
            write_epoch_csv(root / rel, ep.data)
            files.append(rel)
            rate = ep.sample_rate_hz
        participants.append(
            {"participant_id": rec.participant_id, "group": rec.group_label,
             "epochs": files}
        )
    manifest = {"schema_version": 1, "sample_rate_hz": rate, "participants": participants}
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def load_manifest(path):
    """Read a manifest and its epoch CSVs into a validated :class:`Cohort`.

    Epoch paths are resolved relative to the manifest's directory.
    """
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from exc
    try:
        rate = float(manifest["sample_rate_hz"])
        entries = manifest["participants"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"manifest {path} missing field {exc}") from exc
    recs = []
    for entry in entries:
        pid = str(entry["participant_id"])
        epochs = []
        for k, rel in enumerate(entry["epochs"]):
            f = Path(rel)
            if not f.is_absolute():
                f = path.parent / f
            try:
                epochs.append(Epoch(read_epoch_csv(f), rate))
            except ValidationError as exc:
                raise ValidationError(f"participant {pid!r}, epoch {k} ({f}): {exc}") from exc
            except OSError as exc:
                raise ValidationError(f"participant {pid!r}, epoch {k}: cannot read {f}") from exc
        recs.append(ParticipantRecording(pid, entry["group"], tuple(epochs)))
    return validate_cohort(recs)


def bands_from_config(items):
    """Build :class:`BandSpec` objects from ``[{name, low_hz, high_hz}, ...]``."""
    if items is None:
        return [BandSpec(*b) for b in DEFAULT_BANDS]
    out = []
    for it in items:
        out.append(BandSpec(str(it["name"]), float(it["low_hz"]), float(it["high_hz"])))
    return out


def window_labels(windows, sample_rate_hz):
    return [f"{s:.6g}-{e:.6g}" for s, e in windows.times_s(sample_rate_hz)]


__all__ = [
    "Epoch", "ParticipantRecording", "BandSpec", "WindowSpec", "Cohort",
    "bandpass_filter", "design_bandpass", "filter_array", "partition_windows",
    "validate_cohort", "load_manifest", "write_manifest", "GROUPS",
    "DEFAULT_BANDS", "bands_from_config", "format_float",
]

"""Seeded synthetic cohorts with plantable higher-order group differences.

Signals are narrow-band latent oscillators mixed into channels plus white
noise. Each base coupling ``(i, j, strength)`` adds one shared latent to
both channels.

A planted structure (pairwise edge, triangle or chordless loop) owns two
antisymmetric latents per structure edge ``(a, b)``, each entering channel
``a`` with loading ``+L`` and channel ``b`` with ``-L``. The "tension" latent
is always on with ``L = sqrt(tension)`` so the structure survives
sparsification. The "burst" latent is only on inside the effect window, in
both groups, with ``L = sqrt(burst_power)``; for the target group its squared
loading is changed so that the expected squared difference
``E[(x_a - x_b)^2]`` on the structure edges moves by ``amplitude_delta``
times the structure's circulation (``+1, -1, +1`` over the sorted triangle's
edges ``(i,j), (i,k), (j,k)``; the traversal direction around a loop).

Both groups share the burst envelope, and band-limited energy is linear in
squared loadings, so the group difference is a circulation in every
frequency band. A circulation carries no divergence: it lands in the curl
space of a filled triangle or in the harmonic space of an unfilled loop.

Random streams: one Philox (counter-based) generator per participant,
seeded by ``SeedSequence(seed, spawn_key=(participant_index,))``; controls
take indices ``0..n-1`` and patients ``n..2n-1``. Draws happen in a fixed
order regardless of amplitudes, so changing an amplitude never reshuffles
the noise.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .signal_model import GROUPS, Epoch, ParticipantRecording, validate_cohort, write_manifest

STRUCTURES = ("pairwise_edge", "triangle", "loop")


@dataclass(frozen=True)
class PlantedEffect:
    target_group: str
    window_range: tuple
    structure: str
    node_set: tuple
    amplitude_delta: float

    def __post_init__(self):
        object.__setattr__(self, "window_range", tuple(float(v) for v in self.window_range))
        object.__setattr__(self, "node_set", tuple(int(v) for v in self.node_set))
        if self.target_group not in GROUPS:
            raise ValidationError(f"unknown target group {self.target_group!r}")
        if self.structure not in STRUCTURES:
            raise ValidationError(f"unknown structure {self.structure!r}")
        start, end = self.window_range
        if not (0.0 <= start < end <= 1.0):
            raise ValidationError(
                f"window_range must satisfy 0 <= start < end <= 1, got {self.window_range}"
            )
        k = len(self.node_set)
        need = {"pairwise_edge": k == 2, "triangle": k == 3, "loop": k >= 4}
        if not need[self.structure]:
            wanted = {"pairwise_edge": "2", "triangle": "3", "loop": ">= 4"}[self.structure]
            raise ValidationError(f"{self.structure} needs {wanted} nodes, got {k}")
        if len(set(self.node_set)) != k:
            raise ValidationError("node_set has repeated channels")

    def oriented_edges(self):
        """Structure edges as sorted ``(a, b)`` pairs and their circulation signs."""
        nodes = self.node_set
        if self.structure == "pairwise_edge":
            a, b = sorted(nodes)
            return [(a, b)], np.array([1.0])
        if self.structure == "triangle":
            i, j, k = sorted(nodes)
            return [(i, j), (i, k), (j, k)], np.array([1.0, -1.0, 1.0])
        edges, signs = [], []
        for t in range(len(nodes)):
            u, v = nodes[t], nodes[(t + 1) % len(nodes)]
            edges.append((min(u, v), max(u, v)))
            signs.append(1.0 if u < v else -1.0)
        return edges, np.array(signs)

    def loading_shift(self):
        """Per-edge change of squared loading that yields the circulation."""
        edges, signs = self.oriented_edges()
        m = len(edges)
        # E[(x_a-x_b)^2] gains 4 L^2 from the edge's own latent and L^2 from
        # each latent on an edge sharing one endpoint
        mix = np.full((m, m), 0.0)
        for p in range(m):
            for q in range(m):
                if p == q:
                    mix[p, q] = 4.0
                elif set(edges[p]) & set(edges[q]):
                    mix[p, q] = 1.0
        return edges, np.linalg.solve(mix, self.amplitude_delta * signs)


@dataclass(frozen=True)
class SynthConfig:
    n_channels: int
    n_samples: int
    sample_rate_hz: float
    n_participants_per_group: int
    n_epochs_per_participant: int
    base_coupling: tuple = ()
    planted_effects: tuple = ()
    noise_sd: float = 1.0
    seed: int = 0
    latent_band_hz: tuple = (4.0, 8.0)
    tension: float = 1.0
    burst_power: float = 1.0
    participant_gain_sd: float = 0.0

    def __post_init__(self):
        coupling = tuple((int(i), int(j), float(s)) for i, j, s in self.base_coupling)
        effects = tuple(e if isinstance(e, PlantedEffect) else PlantedEffect(**e)
                        for e in self.planted_effects)
        object.__setattr__(self, "base_coupling", coupling)
        object.__setattr__(self, "planted_effects", effects)
        object.__setattr__(self, "latent_band_hz", tuple(float(v) for v in self.latent_band_hz))
        for name in ("n_channels", "n_samples", "n_participants_per_group",
                     "n_epochs_per_participant"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if self.n_channels < 2 or self.n_samples < 2:
            raise ValidationError("need at least 2 channels and 2 samples")
        if not self.sample_rate_hz > 0:
            raise ValidationError("sample_rate_hz must be positive")
        if min(self.noise_sd, self.tension, self.burst_power, self.participant_gain_sd) < 0:
            raise ValidationError(
                "noise_sd, tension, burst_power and participant_gain_sd must be >= 0"
            )
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must be a 64-bit unsigned integer")
        lo, hi = self.latent_band_hz
        if not (0 < lo <= hi < self.sample_rate_hz / 2):
            raise ValidationError("latent_band_hz must lie inside (0, Nyquist)")
        for i, j, s in coupling:
            if not (0 <= i < self.n_channels and 0 <= j < self.n_channels) or i == j:
                raise ValidationError(f"coupling ({i}, {j}) out of channel range")
            if not (0.0 <= s <= 1.0):
                # strengths are relative loadings in [0, 1]
                raise ValidationError(f"coupling strength {s} outside [0, 1]")
        for e in effects:
            if max(e.node_set) >= self.n_channels:
                raise ValidationError(f"effect node_set {e.node_set} out of channel range")
            _, shift = e.loading_shift()
            if np.any(self.burst_power + shift < 0):
                raise ValidationError(
                    f"amplitude_delta {e.amplitude_delta} too large for "
                    f"burst_power {self.burst_power}"
                )

    def to_dict(self):
        d = asdict(self)
        d["planted_effects"] = [asdict(e) for e in self.planted_effects]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("schema_version", None)
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def participant_rng(seed, index):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def _latent(rng, t, band, amplitude="fixed"):
    # both choices have unit mean power; rayleigh makes a Gaussian narrow-band
    # process, fixed keeps every epoch at the same power
    amp = rng.rayleigh(1.0) if amplitude == "rayleigh" else np.sqrt(2.0)
    freq = rng.uniform(band[0], band[1])
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return amp * np.cos(2.0 * np.pi * freq * t + phase)


def fraction_to_sample(frac, n_samples):
    """Round ``frac * n_samples`` half-up, as ``partition_windows`` does."""
    return int(np.floor(frac * n_samples + 0.5))


def _effect_loadings(cfg, group):
    """Per effect: structure edges and ``(n_edges, n_samples)`` burst loadings."""
    n = cfg.n_samples
    out = []
    for eff in cfg.planted_effects:
        edges, shift = eff.loading_shift()
        level = cfg.burst_power + shift * float(group == eff.target_group)
        load = np.zeros((len(edges), n))
        s0 = fraction_to_sample(eff.window_range[0], n)
        s1 = fraction_to_sample(eff.window_range[1], n)
        load[:, s0:s1] = np.sqrt(level)[:, None]
        out.append((edges, load))
    return out


def generate_participant(cfg, index, group):
    rng = participant_rng(cfg.seed, index)
    t = np.arange(cfg.n_samples) / cfg.sample_rate_hz
    gain = float(np.exp(cfg.participant_gain_sd * rng.standard_normal()))
    loadings = _effect_loadings(cfg, group)
    tension = np.sqrt(cfg.tension)
    epochs = []
    for _ in range(cfg.n_epochs_per_participant):
        x = np.zeros((cfg.n_channels, cfg.n_samples))
        for i, j, s in cfg.base_coupling:
            u = _latent(rng, t, cfg.latent_band_hz)
            x[i] += s * u
            x[j] += s * u
        for edges, burst in loadings:
            for (a, b), lt in zip(edges, burst):
                y = tension * _latent(rng, t, cfg.latent_band_hz)
                y += lt * _latent(rng, t, cfg.latent_band_hz)
                x[a] += y
                x[b] -= y
        x += cfg.noise_sd * rng.standard_normal(x.shape)
        epochs.append(Epoch(gain * x, cfg.sample_rate_hz))
    return epochs


def participant_ids(cfg):
    n = cfg.n_participants_per_group
    return [f"c{k:03d}" for k in range(n)] + [f"p{k:03d}" for k in range(n)]


def generate_cohort(cfg, threads=None):
    """All participants, controls first. Identical config gives identical output."""
    n = cfg.n_participants_per_group
    jobs = [(k, "control") for k in range(n)] + [(n + k, "patient") for k in range(n)]
    ids = participant_ids(cfg)

    def make(job):
        idx, group = job
        return ParticipantRecording(ids[idx], group, tuple(generate_participant(cfg, idx, group)))

    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as pool:
            recs = list(pool.map(make, jobs))
    else:
        recs = [make(j) for j in jobs]
    return validate_cohort(recs)


def write_cohort(cohort, out_dir):
    """Write ``manifest.json`` plus ``epochs/*.csv`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return write_manifest(out_dir / "manifest.json", cohort)


__all__ = ["PlantedEffect", "SynthConfig", "generate_cohort", "write_cohort",
           "participant_rng", "STRUCTURES"]

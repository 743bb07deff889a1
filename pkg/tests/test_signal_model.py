import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hodgefast.errors import InvalidBandError, InvalidParameterError, ValidationError
from hodgefast.signal_model import (
    BandSpec, Epoch, ParticipantRecording, bandpass_filter, design_bandpass, load_manifest,
    partition_windows, validate_cohort, write_manifest,
)
from oracles import fft_gain

RATE = 256.0
THETA = BandSpec("theta", 4.0, 8.0)


def _central_half(x):
    n = x.shape[-1]
    return x[..., n // 4: 3 * n // 4]


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


# ---- bandpass_filter -------------------------------------------------------

def test_zero_epoch_stays_zero():
    out = bandpass_filter(Epoch(np.zeros((3, 256)), RATE), THETA)
    assert np.array_equal(out.data, np.zeros((3, 256)))


def test_band_centre_sinusoid_keeps_rms():
    t = np.arange(256) / RATE
    x = np.vstack([np.sin(2 * np.pi * 6.0 * t), np.cos(2 * np.pi * 6.0 * t)])
    out = bandpass_filter(Epoch(x, RATE), THETA, n_taps=101)
    for c in range(2):
        ratio = _rms(_central_half(out.data[c])) / _rms(_central_half(x[c]))
        assert abs(ratio - 1.0) < 0.05


def test_kernel_gain_matches_fft_oracle():
    h = design_bandpass(THETA, RATE, 101)
    assert fft_gain(h, 6.0, RATE) == pytest.approx(1.0, abs=1e-6)
    assert fft_gain(h, 0.0, RATE) < 1e-9
    # the sinusoid measurement above agrees with the kernel response
    t = np.arange(4096) / RATE
    x = np.sin(2 * np.pi * 5.0 * t)[None, :].repeat(2, 0)
    out = bandpass_filter(Epoch(x, RATE), THETA)
    ratio = _rms(_central_half(out.data[0])) / _rms(_central_half(x[0]))
    assert ratio == pytest.approx(fft_gain(h, 5.0, RATE), rel=1e-3)


def test_dc_is_rejected():
    out = bandpass_filter(Epoch(np.full((2, 256), 5.0), RATE), THETA)
    assert np.max(np.abs(_central_half(out.data))) < 0.01 * 5.0


def test_output_shape_and_symmetric_kernel():
    h = design_bandpass(THETA, RATE, 65)
    assert np.allclose(h, h[::-1], rtol=0, atol=1e-15)
    out = bandpass_filter(Epoch(np.random.default_rng(0).standard_normal((4, 300)), RATE),
                          THETA, n_taps=65)
    assert out.data.shape == (4, 300)


def test_zero_phase_on_impulse():
    x = np.zeros((2, 301))
    x[:, 150] = 1.0
    out = bandpass_filter(Epoch(x, RATE), THETA, n_taps=101).data[0]
    assert np.allclose(out[150 - 40:150], out[151:151 + 40][::-1], atol=1e-15)
    assert np.argmax(np.abs(out)) == 150


def test_delta_low_edge_is_clamped():
    h = design_bandpass(BandSpec("delta", 0.0, 4.0), RATE, 101)
    assert abs(h.sum()) < 1e-12


@pytest.mark.parametrize("band", [BandSpec("bad", 4.0, 128.0), BandSpec("bad", 4.0, 200.0)])
def test_band_at_or_above_nyquist_rejected(band):
    with pytest.raises(InvalidBandError):
        bandpass_filter(Epoch(np.ones((2, 256)), RATE), band)


def test_even_or_oversized_taps_rejected():
    ep = Epoch(np.ones((2, 64)), RATE)
    with pytest.raises(InvalidParameterError):
        bandpass_filter(ep, THETA, n_taps=100)
    with pytest.raises(InvalidParameterError):
        bandpass_filter(ep, THETA, n_taps=65)


signals = arrays(np.float64, (3, 128), elements=st.floats(-100, 100))


@settings(max_examples=40, deadline=None)
@given(signals, signals, st.floats(-10, 10), st.floats(-10, 10))
def test_filter_is_linear(x, y, a, b):
    f = lambda z: bandpass_filter(Epoch(z, RATE), THETA, n_taps=31).data  # noqa: E731
    lhs = f(a * x + b * y)
    rhs = a * f(x) + b * f(y)
    scale = max(1.0, np.abs(lhs).max(), np.abs(rhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-10 * scale


@settings(max_examples=30, deadline=None)
@given(signals, st.permutations(range(3)))
def test_filter_commutes_with_channel_permutation(x, perm):
    perm = list(perm)
    f = lambda z: bandpass_filter(Epoch(z, RATE), THETA, n_taps=31).data  # noqa: E731
    assert np.array_equal(f(x)[perm], f(x[perm]))


# ---- partition_windows -----------------------------------------------------

def test_even_division():
    assert partition_windows(10, 5).bounds == ((0, 2), (2, 4), (4, 6), (6, 8), (8, 10))


def test_256_samples_10_windows():
    # round(25.6) = 26 for the first end; round(230.4) = 230 for the last start
    b = partition_windows(256, 10).bounds
    assert b[0] == (0, 26) and b[-1] == (230, 256)
    assert b[8] == (205, 230)


def test_unit_windows():
    assert partition_windows(7, 7).bounds == tuple((k, k + 1) for k in range(7))


def test_half_rounds_up():
    # 1 * 5 / 2 = 2.5 -> 3 under half-up
    assert partition_windows(5, 2).bounds == ((0, 3), (3, 5))


def test_too_many_windows():
    with pytest.raises(InvalidParameterError):
        partition_windows(4, 5)


@given(st.integers(1, 5000), st.integers(1, 200))
def test_windows_partition_the_range(n, w):
    if w > n:
        with pytest.raises(InvalidParameterError):
            partition_windows(n, w)
        return
    spec = partition_windows(n, w)
    assert len(spec.bounds) == w
    assert spec.bounds[0][0] == 0 and spec.bounds[-1][1] == n
    for (s0, e0), (s1, _) in zip(spec.bounds, spec.bounds[1:]):
        assert e0 == s1
    assert all(e - s >= 1 for s, e in spec.bounds)
    assert sum(e - s for s, e in spec.bounds) == n


# ---- validate_cohort / data model ------------------------------------------

def _rec(pid, group, n_ch=3, n_s=16, n_ep=2, seed=0):
    rng = np.random.default_rng(seed)
    return ParticipantRecording(
        pid, group, tuple(Epoch(rng.standard_normal((n_ch, n_s)), RATE) for _ in range(n_ep))
    )


def test_valid_cohort_accepted():
    cohort = validate_cohort([_rec("a", "control"), _rec("b", "patient")])
    assert cohort.n_channels == 3 and cohort.n_samples == 16
    assert list(cohort.groups) == ["control", "patient"]


def test_channel_mismatch_names_participant():
    with pytest.raises(ValidationError, match="participant 'b'"):
        validate_cohort([_rec("a", "control"), _rec("b", "patient", n_ch=4)])


def test_missing_group_rejected():
    with pytest.raises(ValidationError, match="patient"):
        validate_cohort([_rec("a", "control"), _rec("b", "control")])


def test_epoch_rejects_non_finite_and_small():
    with pytest.raises(ValidationError):
        Epoch(np.array([[1.0, np.nan], [0.0, 1.0]]), RATE)
    with pytest.raises(ValidationError):
        Epoch(np.ones((1, 10)), RATE)


def test_epoch_shape_mismatch_within_participant():
    e1 = Epoch(np.ones((2, 8)), RATE)
    e2 = Epoch(np.ones((2, 9)), RATE)
    with pytest.raises(ValidationError, match="epoch 1"):
        ParticipantRecording("x", "control", (e1, e2))


def test_manifest_round_trip_is_exact(tmp_path):
    recs = [_rec("a", "control", seed=1), _rec("b", "patient", seed=2)]
    path = write_manifest(tmp_path / "manifest.json", recs)
    manifest = json.loads(path.read_text())
    assert manifest["schema_version"] == 1
    assert manifest["participants"][0]["group"] == "control"
    back = load_manifest(path)
    for r0, r1 in zip(recs, back.recordings):
        assert r0.participant_id == r1.participant_id
        assert np.array_equal(r0.stacked(), r1.stacked())

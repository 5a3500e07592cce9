from __future__ import annotations

import numpy as np
import pytest
import scipy.signal as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from portiloop_sim.exceptions import FormatError, ParameterError
from portiloop_sim.signal import (
    Decimator,
    EnvelopeBranch,
    FirFilter,
    OnlineStandardizer,
    PipelineConfig,
    PreprocessPipeline,
    design_fir,
    downsample,
    envelope_step,
    fir_step,
    impulse_response,
    pipeline_step,
    read_raw_signal,
    standardize_step,
    write_raw_signal,
)

FS = 250.0


def _sine(freq, seconds, fs=FS, amp=1.0):
    return amp * np.sin(2 * np.pi * freq * np.arange(int(seconds * fs)) / fs)


# --- FIR design -------------------------------------------------------------

def test_lowpass_unit_dc_gain():
    f = design_fir("lowpass", 30.0, 10, FS)
    assert abs(f.coefficients.sum() - 1.0) < 1e-6
    assert f.is_symmetric


@pytest.mark.parametrize("kind,cutoffs,order", [
    ("lowpass", 30.0, 10), ("lowpass", 8.0, 24), ("bandpass", (0.5, 30.0), 10), ("bandpass", (12.0, 16.0), 40),
    ("notch", (50.0, 70.0), 40),
])
def test_design_matches_scipy_firwin(kind, cutoffs, order):
    # scipy is an independent oracle for the windowed-sinc design, up to the normalization gain
    ours = design_fir(kind, cutoffs, order, FS).coefficients
    pass_zero = {"lowpass": True, "bandpass": False, "notch": True}[kind]
    ref = ss.firwin(order + 1, cutoffs, window="hamming", pass_zero=pass_zero, fs=FS, scale=False)
    ref = ref * (ours.sum() / ref.sum()) if kind != "bandpass" else ref * (ours @ ref) / (ref @ ref)
    np.testing.assert_allclose(ours, ref, rtol=0, atol=1e-12)


def test_notch_attenuates_mains():
    f = design_fir("notch", (50.0, 70.0), 40, FS)
    assert abs(f.frequency_response(60.0, FS)[0]) < 0.05


def test_bandpass_selectivity_dft():
    taps = design_fir("bandpass", (12.0, 16.0), 40, FS).coefficients
    spectrum = np.abs(np.fft.rfft(taps, 2500))
    freqs = np.fft.rfftfreq(2500, 1 / FS)
    g14 = spectrum[np.argmin(abs(freqs - 14))]
    g25 = spectrum[np.argmin(abs(freqs - 25))]
    assert g14 > 10 * g25


@pytest.mark.parametrize("kind,cutoffs,order", [
    ("lowpass", 130.0, 10), ("lowpass", 0.0, 10), ("bandpass", (16.0, 12.0), 10), ("bandpass", 12.0, 10),
    ("notch", (50.0, 70.0), 11), ("lowpass", 30.0, 1), ("highpass", 30.0, 10),
])
def test_design_rejects_bad_arguments(kind, cutoffs, order):
    with pytest.raises(ParameterError):
        design_fir(kind, cutoffs, order, FS)


# --- FIR streaming ----------------------------------------------------------

def test_impulse_response_equals_taps():
    f = FirFilter([0.25, 0.5, 0.25])
    out = [fir_step(f, x) for x in [1, 0, 0, 0, 0]]
    assert out == [0.25, 0.5, 0.25, 0.0, 0.0]


def test_constant_input_settles_after_order_plus_one():
    f = design_fir("lowpass", 30.0, 10, FS)
    out = f.process(np.ones(20))
    np.testing.assert_allclose(out[10:], 1.0, atol=1e-12)


def test_order_ten_impulse_delay_is_twenty_ms():
    f = design_fir("lowpass", 30.0, 10, FS)
    peak = int(np.argmax(impulse_response(f, 32)))
    assert peak == 5
    assert 1000 * peak / FS == 20.0
    assert f.delay == 5.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-10, 10), st.floats(-10, 10))
def test_fir_linearity(seed, a, b):
    r = np.random.default_rng(seed)
    x, y = r.normal(size=64), r.normal(size=64)
    taps = design_fir("bandpass", (0.5, 30.0), 10, FS).coefficients
    lhs = FirFilter(taps).process(a * x + b * y)
    rhs = a * FirFilter(taps).process(x) + b * FirFilter(taps).process(y)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_fir_matches_lfilter():
    x = np.random.default_rng(0).normal(size=500)
    taps = design_fir("bandpass", (12.0, 16.0), 20, FS).coefficients
    np.testing.assert_allclose(FirFilter(taps).process(x), ss.lfilter(taps, [1.0], x), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 90), min_size=1, max_size=8))
def test_fir_chunking_is_bit_identical(cuts):
    x = np.random.default_rng(len(cuts)).normal(size=300)
    taps = design_fir("bandpass", (0.5, 30.0), 10, FS).coefficients
    whole = FirFilter(taps).process(x)
    f = FirFilter(taps)
    bounds = np.cumsum([0] + cuts)
    bounds = bounds[bounds < x.size].tolist() + [x.size]
    parts = [f.process(x[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])]
    assert np.array_equal(np.concatenate(parts), whole)


# --- standardizer -----------------------------------------------------------

def test_standardizer_mean_update():
    s = OnlineStandardizer(alpha_mu=0.1, alpha_sigma=0.001, mu0=1.0)
    standardize_step(s, 2.0)
    assert s.mu_hat == pytest.approx(1.1, abs=1e-15)


def test_standardizer_constant_input_is_zero():
    s = OnlineStandardizer(0.1, 0.001, mu0=3.0, var0=0.0)
    out = s.process(np.full(100, 3.0))
    assert np.all(out == 0.0)


def test_standardizer_first_sample_seeds_mean():
    s = OnlineStandardizer()
    assert standardize_step(s, 5.0) == 0.0
    assert s.mu_hat == 5.0 and s.sigma2_hat == pytest.approx(0.999)


def test_standardizer_suppresses_slow_drifts():
    s = OnlineStandardizer(0.1, 0.001)
    rms = {}
    for f in (1.0, 12.0):
        s.reset()
        y = s.process(_sine(f, 10))
        rms[f] = np.sqrt(np.mean(y[-int(5 * FS):] ** 2))
    assert rms[1.0] < rms[12.0]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_standardizer_bounded(xs):
    s = OnlineStandardizer(0.1, 0.001, var0=0.0)
    out = s.process(np.array(xs))
    assert np.all(np.isfinite(out))
    assert s.sigma2_hat >= 0


@pytest.mark.parametrize("alpha", [-0.1, 1.5])
def test_standardizer_rejects_bad_alpha(alpha):
    with pytest.raises(ParameterError):
        OnlineStandardizer(alpha_mu=alpha)


# --- envelope ---------------------------------------------------------------

def test_envelope_zero_input():
    b = EnvelopeBranch(PipelineConfig())
    assert all(envelope_step(b, 0.0) == 0.0 for _ in range(50))


def test_envelope_converges_for_sustained_spindle_tone():
    env = EnvelopeBranch(PipelineConfig()).process(_sine(14.0, 20))
    last = env[-int(FS):]
    assert np.all(env >= 0)
    assert last.mean() > 0
    assert last.std() / last.mean() < 0.1


@pytest.mark.xfail(strict=True, reason="the slow standardizer renormalizes any sustained tone to unit variance, "
                                       "so steady-state envelopes of 14 Hz and 25 Hz tones are both near 1")
def test_envelope_steady_state_rejects_25hz_literal():
    e14 = EnvelopeBranch(PipelineConfig()).process(_sine(14.0, 20))[-int(FS):].mean()
    e25 = EnvelopeBranch(PipelineConfig()).process(_sine(25.0, 20))[-int(FS):].mean()
    assert e25 < 0.1 * e14


def test_envelope_prefers_spindle_band_burst():
    # The order-20 band-pass allowed by the 10-sample delay budget passes 25 Hz at about half
    # amplitude, so only a moderate preference is attainable (see the decisions ledger).
    noise = 0.1 * np.random.default_rng(3).normal(size=int(30 * FS))
    rise = {}
    for f in (14.0, 25.0):
        x = noise.copy()
        lo = int(25 * FS)
        x[lo:lo + int(FS)] += _sine(f, 1.0)
        env = EnvelopeBranch(PipelineConfig()).process(x)
        rise[f] = env[lo:lo + int(1.5 * FS)].max() - env[lo - int(FS):lo].mean()
    assert rise[14.0] > 1.5 * rise[25.0] > 0


# --- downsampling -----------------------------------------------------------

def test_downsample_keeps_even_indices():
    assert downsample(["a", "b", "c", "d"]).tolist() == ["a", "c"]


@pytest.mark.parametrize("n", [0, 1, 2, 7, 100, 101])
def test_downsample_length(n):
    assert downsample(np.arange(n)).size == -(-n // 2)


def test_downsample_preserves_tone():
    y = downsample(_sine(10.0, 4, fs=500.0))
    freqs = np.fft.rfftfreq(y.size, 1 / 250.0)
    assert freqs[np.argmax(np.abs(np.fft.rfft(y)))] == pytest.approx(10.0)


def test_downsample_rejects_fractional_ratio():
    with pytest.raises(ParameterError):
        downsample(np.arange(10), 500.0, 300.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=10))
def test_decimator_streams_like_batch(cuts):
    x = np.arange(int(sum(cuts)) + 7)
    d = Decimator(500.0, 250.0)
    bounds = np.cumsum([0] + cuts).tolist() + [x.size]
    out = np.concatenate([d.process(x[lo:hi]) for lo, hi in zip(bounds[:-1], bounds[1:])])
    assert np.array_equal(out, downsample(x))


# --- pipeline ---------------------------------------------------------------

def test_pipeline_group_delay_is_forty_ms():
    p = PreprocessPipeline()
    assert p.group_delay_ms() == 40.0
    assert p.branch_delays_ms() == {"clean": 40.0, "envelope": 40.0}


def test_pipeline_branch_impulse_peaks_align():
    ir = PreprocessPipeline().impulse_responses(64)
    assert int(np.argmax(np.abs(ir["clean"]))) == int(np.argmax(np.abs(ir["envelope"]))) == 10


def test_pipeline_zero_input():
    p = PreprocessPipeline()
    assert all(pipeline_step(p, 0.0) == (0.0, 0.0) for _ in range(30))


def test_pipeline_chunking_is_bit_identical():
    x = np.random.default_rng(1).normal(size=2000)
    whole = PreprocessPipeline().process(x)
    p = PreprocessPipeline()
    parts = [p.process(x[lo:hi]) for lo, hi in [(0, 1), (1, 333), (333, 1000), (1000, 2000)]]
    for i in range(2):
        assert np.array_equal(np.concatenate([q[i] for q in parts]), whole[i])


def test_pipeline_describe_reports_notch():
    d = PreprocessPipeline().describe()
    assert d["notch_order"] == 10 and d["notch_band_hz"] == [50.0, 70.0]
    assert d["clean_branch_gain_at_mains"] < 0.05


# --- raw signal io ----------------------------------------------------------

def test_raw_signal_round_trip(tmp_path):
    x = np.random.default_rng(2).normal(size=100).astype(np.float32)
    path = write_raw_signal(tmp_path / "sig.f32", x, 250.0)
    y, fs = read_raw_signal(path)
    assert fs == 250.0 and np.array_equal(y, x.astype(np.float64))


def test_raw_signal_csv_column(tmp_path):
    path = tmp_path / "sig.csv"
    path.write_text("t,eeg\n0,1.5\n1,2.5\n")
    y, fs = read_raw_signal(path, column="eeg", sample_rate=500)
    assert y.tolist() == [1.5, 2.5] and fs == 500.0


def test_raw_signal_missing_sidecar(tmp_path):
    path = tmp_path / "sig.f32"
    np.zeros(4, dtype="<f4").tofile(path)
    with pytest.raises(FormatError):
        read_raw_signal(path)

from __future__ import annotations

import numpy as np
import pytest
import scipy.signal as ss
from hypothesis import given, settings
from hypothesis import strategies as st

from portiloop_sim.exceptions import FormatError, ParameterError
from portiloop_sim.synth import (
    Recording,
    SequenceDataset,
    SyntheticConfig,
    binary_to_intervals,
    export_csv,
    generate_dataset,
    generate_recording,
    load_recording,
    oversample_batches,
    runs,
    save_recording,
    score_to_binary,
    split_subjects,
)


def _label_oracle(scores, threshold, fs):
    """Sample-by-sample loop: threshold, merge short gaps, drop out-of-range segments."""
    segs, start = [], None
    for i, s in enumerate(list(scores) + [-1.0]):
        if s >= threshold and start is None:
            start = i
        elif s < threshold and start is not None:
            segs.append([start, i])
            start = None
    merged = []
    for seg in segs:
        if merged and (seg[0] - merged[-1][1]) / fs < 0.1:
            merged[-1][1] = seg[1]
        else:
            merged.append(seg)
    out = [False] * len(scores)
    for a, b in merged:
        if 0.3 <= (b - a) / fs <= 2.5:
            for i in range(a, b):
                out[i] = True
    return np.array(out, dtype=bool)


def _segments(fs, spec):
    """Scores from ``[(level, seconds), ...]``."""
    return np.concatenate([np.full(int(round(sec * fs)), lvl) for lvl, sec in spec])


# --- labels -----------------------------------------------------------------

def test_merge_then_keep():
    fs = 1000.0
    s = _segments(fs, [(0, 1), (0.5, 0.25), (0, 0.05), (0.5, 0.20), (0, 1)])
    out = score_to_binary(s, 1, fs)
    assert [(b - a) / fs for a, b in runs(out)] == [0.5]


def test_short_segment_dropped():
    s = _segments(250.0, [(0, 1), (0.5, 0.2), (0, 1)])
    assert not score_to_binary(s, 1).any()


def test_long_segment_dropped():
    s = _segments(250.0, [(0, 1), (0.5, 3.0), (0, 1)])
    assert not score_to_binary(s, 1).any()


def test_phase_thresholds():
    s = _segments(250.0, [(0, 1), (0.3, 1.0), (0, 1)])
    assert score_to_binary(s, 1).sum() == 250
    assert not score_to_binary(s, 2).any()
    with pytest.raises(ParameterError):
        score_to_binary(s, 3)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.integers(1, 400)), min_size=1, max_size=12), st.sampled_from([1, 2]))
def test_labels_match_loop_oracle(spec, phase):
    scores = np.concatenate([np.full(n, v) for v, n in spec])
    out = score_to_binary(scores, phase, 250.0)
    assert np.array_equal(out, _label_oracle(scores, {1: 0.2, 2: 0.35}[phase], 250.0))
    for a, b in runs(out):
        assert 0.3 <= (b - a) / 250.0 <= 2.5
    assert np.array_equal(score_to_binary(out * 1.0, phase, 250.0), out)


def test_runs_and_intervals():
    m = np.array([0, 1, 1, 0, 1], dtype=bool)
    assert runs(m).tolist() == [[1, 3], [4, 5]]
    assert binary_to_intervals(m, 2.0) == [(0.5, 1.5), (2.0, 2.5)]
    assert runs([]).shape == (0, 2)


# --- generator --------------------------------------------------------------

@pytest.fixture(scope="module")
def recording():
    return generate_recording(SyntheticConfig(seed=3), 4, 1)


def test_generator_deterministic(recording):
    again = generate_recording(SyntheticConfig(seed=3), 4, 1)
    assert np.array_equal(again.samples, recording.samples)
    assert np.array_equal(again.scores, recording.scores)
    assert np.array_equal(again.binary, recording.binary)
    other = generate_recording(SyntheticConfig(seed=4), 4, 1)
    assert not np.array_equal(other.samples, recording.samples)


def test_generator_density_and_frequency():
    recs = generate_dataset(SyntheticConfig(seed=0), 10)
    density = np.mean([r.density for r in recs])
    assert 0.03 <= density <= 0.07
    for r in recs:
        assert all(12.0 <= a.frequency_hz <= 16.0 for a in r.annotations)
        assert 0.0 <= r.scores.min() and r.scores.max() <= 1.0
        assert np.array_equal(r.binary, score_to_binary(r.scores, r.phase, r.sample_rate))
    assert [r.phase for r in recs] == [1] * 6 + [2] * 4


def test_generator_label_alignment():
    # zero-phase band-pass + Hilbert magnitude; a single recording's peak is broad and noisy,
    # so the cross-correlation is pooled over 20 subjects
    fs = 250.0
    b, a = ss.butter(4, [12.0, 16.0], btype="bandpass", fs=fs)
    lags = np.arange(-25, 26)
    total = np.zeros(lags.size)
    for sid in range(20):
        rec = generate_recording(SyntheticConfig(seed=3), sid, 1)
        env = np.abs(ss.hilbert(ss.filtfilt(b, a, rec.samples.astype(np.float64))))
        env -= env.mean()
        score = rec.scores - rec.scores.mean()
        total += [np.dot(np.roll(env, -k), score) for k in lags]
    assert abs(lags[int(np.argmax(total))]) <= 1


def test_config_validation():
    with pytest.raises(ParameterError):
        SyntheticConfig(spindle_density=0.3)
    with pytest.raises(ParameterError):
        SyntheticConfig(score_peak_range=(0.5, 1.5))
    cfg = SyntheticConfig(snr_range=(1.0, 2.0))
    assert SyntheticConfig.from_dict(cfg.to_dict()) == cfg


# --- splits and batches -----------------------------------------------------

def _stub(sid, n=100):
    return Recording(sid, 1, np.zeros(n, np.float32), np.zeros(n, np.float32), np.zeros(n, bool))


def test_split_sizes_and_disjoint():
    recs = [_stub(i) for i in range(20)]
    train, val, test = split_subjects(recs, seed=1)
    assert (len(train), len(val), len(test)) == (16, 2, 2)
    ids = [{r.subject_id for r in part} for part in (train, val, test)]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert split_subjects(recs, seed=1)[2] == test


def test_split_rounds_up_and_needs_ten():
    train, val, test = split_subjects([_stub(i) for i in range(11)], seed=0)
    assert (len(train), len(val), len(test)) == (7, 2, 2)
    with pytest.raises(ParameterError):
        split_subjects([_stub(i) for i in range(9)], seed=0)


def _toy_dataset(n=2000, seed=0):
    r = np.random.default_rng(seed)
    labels = np.zeros(n, bool)
    labels[300:400] = labels[1200:1260] = True
    return SequenceDataset.from_arrays([r.normal(size=(1, n)).astype(np.float32)], [labels.astype(np.float32)])


def test_oversampling_positive_fraction():
    ds = _toy_dataset()
    gen = oversample_batches(ds, 256, seed=0, window=1, dilation=1, seq_len=1)
    frac = np.mean([next(gen)[2].mean() for _ in range(10_000)])
    assert abs(frac - 0.5) <= 0.02


def test_oversampling_shapes_and_determinism():
    ds = _toy_dataset()
    kw = dict(window=54, dilation=42, seq_len=5)
    X1, y1, p1 = next(oversample_batches(ds, 8, seed=4, **kw))
    X2, y2, p2 = next(oversample_batches(ds, 8, seed=4, **kw))
    assert X1.shape == (8, 5, 1, 54)
    assert np.array_equal(X1, X2) and np.array_equal(y1, y2)


def test_gather_window_positions():
    sig = np.arange(500, dtype=np.float32)[None]
    ds = SequenceDataset.from_arrays([sig], [np.zeros(500)])
    X = ds.gather(np.array([499]), window=4, dilation=10, seq_len=3)
    assert X[0, :, 0].tolist() == [[476, 477, 478, 479], [486, 487, 488, 489], [496, 497, 498, 499]]


def test_oversampling_needs_both_classes():
    ds = SequenceDataset.from_arrays([np.zeros((1, 500), np.float32)], [np.zeros(500)])
    with pytest.raises(ParameterError):
        next(oversample_batches(ds, 4, seed=0, window=1, dilation=1, seq_len=1))


# --- files ------------------------------------------------------------------

def test_recording_round_trip(tmp_path, recording):
    path = save_recording(recording, tmp_path / "r.plrec")
    back = load_recording(path)
    assert (back.subject_id, back.phase, back.sample_rate) == (4, 1, 250.0)
    for name in ("samples", "scores", "binary"):
        assert np.array_equal(getattr(back, name), getattr(recording, name))
    raw = path.read_bytes()
    (tmp_path / "cut.plrec").write_bytes(raw[:-3])
    with pytest.raises(FormatError):
        load_recording(tmp_path / "cut.plrec")
    (tmp_path / "bad.plrec").write_bytes(b"X" + raw[1:])
    with pytest.raises(FormatError):
        load_recording(tmp_path / "bad.plrec")


def test_export_csv(tmp_path):
    rec = _stub(0, 5)
    lines = export_csv(rec, tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "time_s,sample,score,binary" and len(lines) == 6

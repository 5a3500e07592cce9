from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import policy_oracle
from portiloop_sim.detector import (
    DetectorConfig,
    StimulationPolicy,
    StreamingDetector,
    VirtualHiddenFifo,
    fifo_step,
    run_stream,
    stimulation_policy_step,
)
from portiloop_sim.exceptions import ContractError, ParameterError, ShapeError
from portiloop_sim.nn import Network, NetworkSpec
from portiloop_sim.signal import PreprocessPipeline


# --- policy -----------------------------------------------------------------

def test_first_detection_fires_with_delay():
    p = StimulationPolicy()
    ev = stimulation_policy_step(p, True, 10.0)
    assert ev.trigger_time_s == pytest.approx(10.064) and ev.detection_time_s == 10.0


def test_redetection_renews_refractory():
    p = StimulationPolicy()
    times = np.round(np.arange(10.0, 10.52, 0.02), 10)
    events = p.run([True] * len(times), times)
    assert len(events) == 1
    assert p.step(False, 10.6) is None
    assert p.step(True, 10.7) is None
    assert p.refractory_deadline_s == pytest.approx(11.1)
    assert p.step(True, 11.0) is None
    assert p.refractory_deadline_s == pytest.approx(11.4)
    assert p.step(True, 11.4) is not None


def test_two_bursts_separated_by_silence():
    p = StimulationPolicy()
    times = np.round(np.arange(0, 4, 0.02), 10)
    det = ((times >= 1.0) & (times < 1.5)) | ((times >= 2.5) & (times < 3.0))
    assert len(p.run(det, times)) == 2


def test_time_must_not_go_backwards():
    p = StimulationPolicy()
    p.step(False, 1.0)
    with pytest.raises(ContractError):
        p.step(False, 0.5)


def test_policy_rejects_negative_durations():
    with pytest.raises(ParameterError):
        StimulationPolicy(refractory_s=-1)


@settings(max_examples=500, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([100, 250, 600, 1000]), st.sampled_from([0, 200, 400]))
def test_policy_matches_timeline_oracle(seed, stimulus, refractory):
    # the policy is unit-agnostic; integer milliseconds keep boundary comparisons exact
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 300))
    times = np.cumsum(rng.choice([4, 20, 50, 300], size=n)).astype(float)
    detected = rng.random(n) < rng.uniform(0.05, 0.9)
    p = StimulationPolicy(refractory_s=refractory, stimulus_s=stimulus, constant_delay_s=64)
    events = p.run(detected, times)
    fired = [e.detection_time_s for e in events]
    assert fired == policy_oracle(times, detected, refractory, stimulus)
    assert np.all(np.diff(fired) >= stimulus)  # no two stimuli overlap
    for t in fired:
        assert not np.any(detected & (times > t - refractory) & (times < t))
    assert all(e.trigger_time_s == e.detection_time_s + 64 for e in events)


# --- FIFO -------------------------------------------------------------------

def test_fifo_ring_order():
    f = VirtualHiddenFifo(3, (2,), np.float64)
    for v in (1.0, 2.0, 3.0, 4.0):
        f.pop()
        f.push(np.full(2, v))
    assert f.ordered()[:, 0].tolist() == [2.0, 3.0, 4.0]
    assert len(f) == 3
    with pytest.raises(ParameterError):
        VirtualHiddenFifo(0, (2,))


@pytest.mark.parametrize("K", [1, 2, 8])
def test_fifo_step_matches_decoupled_networks(tiny_net, K):
    windows = np.random.default_rng(K).normal(size=(10 * K, 1, 32))
    fifo = VirtualHiddenFifo(K, (1, 1, 3), np.float64)
    scores = [fifo_step(fifo, tiny_net, w) for w in windows]
    for k in range(K):
        h = None
        for j in range(k, len(windows), K):
            y, h = tiny_net.forward_window(windows[j], h)
            assert abs(scores[j] - y) <= 1e-12


# --- streaming --------------------------------------------------------------

def test_config_defaults_and_validation(final_spec):
    cfg = DetectorConfig()
    assert (cfg.stride_samples, cfg.dilation_samples, cfg.K) == (5, 40, 8)
    net_cfg = DetectorConfig.for_network(final_spec, threshold=0.84)
    assert (net_cfg.stride_samples, net_cfg.dilation_samples, net_cfg.K, net_cfg.threshold) == (6, 42, 7, 0.84)
    with pytest.raises(ParameterError):
        DetectorConfig(stride_samples=5, dilation_samples=42)
    with pytest.raises(ParameterError):
        DetectorConfig(threshold=1.5)
    assert DetectorConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("threshold,n_events", [(0.84, 0), (0.4, 1)])
def test_zero_network_thresholds(final_spec, threshold, n_events):
    sig = np.random.default_rng(0).normal(size=(1, 250 * 20))
    res = run_stream(sig, Network.zeros(final_spec), DetectorConfig(threshold=threshold))
    assert np.all(res.scores == 0.5)
    assert len(res.events) == n_events
    if n_events:
        assert res.events[0].detection_time_s == 53 / 250


def test_trigger_times_are_window_ends_plus_delay(tiny_net):
    sig = np.random.default_rng(1).normal(size=(1, 3000))
    cfg = DetectorConfig(threshold=0.0, stride_samples=4, dilation_samples=16)
    res = run_stream(sig, tiny_net, cfg)
    assert np.all(np.diff(res.window_ends) == 4) and res.window_ends[0] == 31
    assert set(res.trigger_times_s) <= set(res.window_ends / 250 + 0.064)
    np.testing.assert_allclose(res.score_times_s, res.window_ends / 250 + 0.064)


@pytest.mark.parametrize("chunk", [1, 7, 64, 1000])
def test_chunking_matches_whole_stream(tiny_net, chunk):
    sig = np.random.default_rng(2).normal(size=(1, 2500))
    cfg = DetectorConfig(threshold=0.45, stride_samples=4, dilation_samples=16)
    whole = run_stream(sig, tiny_net, cfg)
    parts = run_stream(sig, tiny_net, cfg, chunk_size=chunk)
    assert np.array_equal(whole.window_ends, parts.window_ends)
    assert np.max(np.abs(whole.scores - parts.scores)) <= 1e-12
    assert whole.events == parts.events


def test_stream_matches_fifo_stepping(tiny_net):
    sig = np.random.default_rng(3).normal(size=(1, 600))
    cfg = DetectorConfig(stride_samples=4, dilation_samples=16)
    res = run_stream(sig, tiny_net, cfg, chunk_size=50)
    fifo = VirtualHiddenFifo(4, (1, 1, 3), np.float64)
    ref = [fifo_step(fifo, tiny_net, sig[:, e - 31:e + 1]) for e in res.window_ends]
    np.testing.assert_allclose(res.scores, ref, atol=1e-12)


def test_preprocessing_inside_detector(tiny_net):
    raw = np.random.default_rng(4).normal(size=1500)
    cfg = DetectorConfig(stride_samples=4, dilation_samples=16)
    clean, _ = PreprocessPipeline().process(raw)
    direct = run_stream(clean[None], tiny_net, cfg)
    det = StreamingDetector(tiny_net, cfg, preprocess=True)
    scores = np.concatenate([det.process(raw[lo:lo + 100])[0] for lo in range(0, 1500, 100)])
    np.testing.assert_allclose(scores, direct.scores, atol=1e-12)


def test_stream_errors(tiny_net):
    with pytest.raises(ShapeError):
        run_stream(np.zeros((1, 10)), tiny_net, DetectorConfig(stride_samples=4, dilation_samples=16))
    with pytest.raises(ShapeError):
        run_stream(np.zeros((2, 100)), tiny_net, DetectorConfig(stride_samples=4, dilation_samples=16))

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from gradcheck import numeric_grad, rel_error
from portiloop_sim.exceptions import FormatError, ParameterError, ShapeError
from portiloop_sim.nn import Network, NetworkSpec, count_parameters, forward_window, load_weights, save_weights

GOLDEN = Path(__file__).parent / "golden" / "forward_window.json"


def naive_forward_window(net, window, h):
    """Loop-level reference: conv+ReLU stack, flatten (length-major, channel-minor), GRU, dense."""
    s, p = net.spec, net.params
    H = s.rnn_hidden
    tops, h_new = [], np.zeros_like(h)
    for br in range(s.n_inputs):
        x = np.asarray(window[br], dtype=np.float64)[None]  # (C=1, L)
        for i in range(s.cnn_layers):
            W, b = p[f"b{br}.conv{i}.weight"], p[f"b{br}.conv{i}.bias"]
            O, C, K = W.shape
            L_out = x.shape[1] - K + 1
            y = np.zeros((O, L_out))
            for o in range(O):
                for t in range(L_out):
                    y[o, t] = b[o] + np.sum(W[o] * x[:, t:t + K])
            x = np.maximum(y, 0)
        feat = x.T.reshape(-1)
        for j in range(s.rnn_layers):
            W, U, b = p[f"b{br}.gru{j}.W"], p[f"b{br}.gru{j}.U"], p[f"b{br}.gru{j}.b"]
            hj = h[br, j]
            sig = lambda a: 1 / (1 + np.exp(-a))  # noqa: E731
            z = sig(W[:H] @ feat + U[:H] @ hj + b[:H])
            r = sig(W[H:2 * H] @ feat + U[H:2 * H] @ hj + b[H:2 * H])
            n = np.tanh(W[2 * H:] @ feat + r * (U[2 * H:] @ hj + b[2 * H:]))
            feat = (1 - z) * n + z * hj
            h_new[br, j] = feat
        tops.append(feat)
    logit = p["dense.weight"][0] @ np.concatenate(tops) + p["dense.bias"][0]
    return (1 / (1 + np.exp(-logit)) if s.mode == "classifier" else logit), h_new


# --- spec and counts --------------------------------------------------------

def test_spec_discretization(final_spec):
    assert final_spec.window_samples == 54
    assert final_spec.dilation_samples == 42
    assert final_spec.cnn_lengths() == [54, 48, 42, 36]
    assert final_spec.feature_size == 36 * 31


def test_count_closed_form_terms():
    one = NetworkSpec(cnn_layers=1, cnn_channels=31, conv_kernel=7)
    conv = 31 * (1 * 7 + 1)
    assert conv == 248
    gru = 3 * 7 * (48 * 31) + 3 * 7 * 7 + 3 * 7
    assert count_parameters(one) == conv + gru + 8


def test_count_final_spec(final_spec):
    assert count_parameters(final_spec) == 248 + 2 * 6758 + 23604 + 8 == 37376


@pytest.mark.parametrize("kw", [
    {}, {"inputs": "clean+envelope"}, {"rnn_layers": 3, "rnn_hidden": 5}, {"cnn_layers": 1, "cnn_channels": 2},
    {"pool_kernel": 2, "pool_stride": 2, "conv_dilation": 2, "cnn_layers": 2},
])
def test_count_matches_serialized(tmp_path, kw):
    net = Network.initialize(NetworkSpec(**kw), seed=0)
    assert net.n_parameters() == count_parameters(net.spec)
    size = save_weights(net, tmp_path / "w.plw").stat().st_size
    header = 14 + len(json.dumps(net.spec.to_dict(), sort_keys=True).encode())
    assert size - header == 4 * count_parameters(net.spec)


@pytest.mark.parametrize("kw", [
    {"cnn_layers": 0}, {"rnn_hidden": 2.5}, {"inputs": "raw"}, {"mode": "ranker"}, {"cnn_layers": 10},
    {"window_size_s": -1.0},
])
def test_spec_validation(kw):
    with pytest.raises(ParameterError):
        NetworkSpec(**kw)


def test_spec_dict_round_trip():
    spec = NetworkSpec(inputs="clean+envelope", mode="regressor")
    assert NetworkSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ParameterError):
        NetworkSpec.from_dict({"bogus": 1})


# --- forward ----------------------------------------------------------------

def test_zero_network_outputs_half(final_spec):
    y, h = forward_window(Network.zeros(final_spec), np.random.default_rng(0).normal(size=(1, 54)))
    assert y == 0.5
    assert np.all(h == 0)


@pytest.mark.parametrize("kw", [{}, {"inputs": "clean+envelope", "rnn_layers": 2}, {"mode": "regressor"}])
def test_forward_matches_naive_reference(kw):
    spec = NetworkSpec(**kw)
    net = Network.initialize(spec, seed=1, dtype=np.float64)
    rng = np.random.default_rng(2)
    h = net.initial_state(1)[:, :, 0]
    h_ref = h.copy()
    for _ in range(3):
        w = rng.normal(size=(spec.n_inputs, 54))
        y, h = net.forward_window(w, h)
        y_ref, h_ref = naive_forward_window(net, w, h_ref)
        assert y == pytest.approx(float(y_ref), abs=1e-12)
        np.testing.assert_allclose(h, h_ref, atol=1e-12)


def test_forward_golden_value(final_spec):
    golden = json.loads(GOLDEN.read_text())
    net = Network.initialize(final_spec, seed=golden["seed"], dtype=np.float64)
    windows = np.random.default_rng(golden["input_seed"]).normal(size=(golden["steps"], 1, 54))
    h = None
    for w in windows:
        y, h = net.forward_window(w, h)
    assert abs(y - golden["y"]) < 1e-9


def test_classifier_output_in_open_interval(final_spec):
    net = Network.initialize(final_spec, seed=3, dtype=np.float64)
    X = np.random.default_rng(4).normal(scale=50, size=(64, 2, 1, 54))
    y = net.predict_sequences(X)
    assert np.all((y > 0) & (y < 1))


def test_forward_shape_errors(final_spec):
    net = Network.zeros(final_spec)
    with pytest.raises(ShapeError):
        net.forward_window(np.zeros((1, 50)))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 3, 2, 54)))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 3, 1, 54)), h0=np.zeros((1, 1, 3, 7)))


def test_eval_mode_ignores_dropout(tiny_net):
    X = np.random.default_rng(5).normal(size=(3, 4, 1, 32))
    a, _, _ = tiny_net.forward(X)
    b, _, _ = tiny_net.forward(X, training=False, dropout=0.5, rng=0)
    assert np.array_equal(a, b)


# --- backward ---------------------------------------------------------------

@pytest.mark.parametrize("kw,dropout", [({}, 0.0), ({}, 0.5), ({"inputs": "clean+envelope", "rnn_layers": 2}, 0.3),
                                        ({"pool_kernel": 2, "pool_stride": 2}, 0.0)])
def test_network_gradient(kw, dropout):
    spec = NetworkSpec(window_size_s=0.128, dilation_s=0.064, cnn_layers=2, cnn_channels=3, conv_kernel=5,
                       rnn_hidden=3, **kw)
    net = Network.initialize(spec, seed=8, dtype=np.float64)
    rng = np.random.default_rng(9)
    X = rng.normal(size=(2, 3, spec.n_inputs, 32))
    h0 = rng.normal(scale=0.5, size=(spec.n_inputs, spec.rnn_layers, 2, 3))
    G = rng.normal(size=(2, 3))

    def loss():
        logits, _, _ = net.forward(X, h0, training=True, dropout=dropout, rng=11, all_steps=True)
        return float(np.sum(G * logits))

    _, _, cache = net.forward(X, h0, training=True, dropout=dropout, rng=11, keep_cache=True, all_steps=True)
    grads, dX = net.backward(G, cache, need_input_grad=True)
    names = net.parameter_names()
    numeric = numeric_grad(loss, [net.params[k] for k in names] + [X])
    assert rel_error([grads[k] for k in names] + [dX], numeric) < 1e-4


def test_backward_requires_cache(tiny_net):
    with pytest.raises(ParameterError):
        tiny_net.backward(np.zeros(1), None)


# --- interleaved inference --------------------------------------------------

@pytest.mark.parametrize("K", [1, 2, 4, 8])
def test_scan_matches_independent_networks(K):
    spec = NetworkSpec()
    net = Network.initialize(spec, seed=10, dtype=np.float64)
    windows = np.random.default_rng(K).normal(size=(101, 1, 54))
    scores, state = net.scan_interleaved(windows, K)
    ref = np.empty(101)
    for k in range(K):
        h = None
        for j in range(k, 101, K):
            ref[j], h = net.forward_window(windows[j], h)
        np.testing.assert_allclose(state[k], h, rtol=0, atol=1e-12)
    assert np.max(np.abs(scores - ref)) <= 1e-12


def test_scan_continues_from_state(tiny_net):
    windows = np.random.default_rng(12).normal(size=(23, 1, 32))
    whole, s_whole = tiny_net.scan_interleaved(windows, 4)
    a, s = tiny_net.scan_interleaved(windows[:8], 4)
    b, s = tiny_net.scan_interleaved(windows[8:], 4, s)
    np.testing.assert_allclose(np.concatenate([a, b]), whole, atol=1e-12)
    np.testing.assert_allclose(s, s_whole, atol=1e-12)


# --- weights files ----------------------------------------------------------

def test_weights_round_trip(tmp_path, final_spec):
    net = Network.initialize(final_spec, seed=13)
    back = load_weights(save_weights(net, tmp_path / "w.plw"), final_spec)
    w = np.random.default_rng(14).normal(size=(1, 54))
    assert back.forward_window(w)[0] == net.forward_window(w)[0]
    for k in net.params:
        assert np.array_equal(back.params[k], net.params[k])


def test_weights_errors(tmp_path, final_spec):
    path = save_weights(Network.initialize(final_spec, seed=0), tmp_path / "w.plw")
    raw = path.read_bytes()
    (tmp_path / "cut.plw").write_bytes(raw[:-10])
    with pytest.raises(FormatError):
        load_weights(tmp_path / "cut.plw")
    with pytest.raises(FormatError):
        load_weights(path, NetworkSpec(rnn_hidden=8))
    (tmp_path / "magic.plw").write_bytes(b"NOTAFILE" + raw[8:])
    with pytest.raises(FormatError):
        load_weights(tmp_path / "magic.plw")
    (tmp_path / "ver.plw").write_bytes(raw[:8] + b"\x09\x00" + raw[10:])
    with pytest.raises(FormatError):
        load_weights(tmp_path / "ver.plw")

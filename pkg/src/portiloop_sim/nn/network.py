"""Spindle detector network: per-input CNN stack, flatten, GRU stack, dense output.

A single-input network has one branch. The two-input variant runs one branch
per input (clean signal, envelope) and concatenates their last GRU states
before the dense layer.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .._validation import check_random_state
from ..exceptions import ParameterError, ShapeError
from . import layers as L

__all__ = ["NetworkSpec", "Network", "count_parameters", "forward_window"]

INPUT_CHOICES = {"clean": 1, "clean+envelope": 2}
MODE_CHOICES = ("classifier", "regressor")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture hyperparameters.

    Durations are in seconds and converted to samples at ``sample_rate`` by
    rounding to the nearest integer.
    """

    window_size_s: float = 0.216
    dilation_s: float = 0.168
    cnn_layers: int = 3
    cnn_channels: int = 31
    conv_kernel: int = 7
    conv_stride: int = 1
    conv_dilation: int = 1
    pool_kernel: int = 1
    pool_stride: int = 1
    pool_dilation: int = 1
    rnn_layers: int = 1
    rnn_hidden: int = 7
    inputs: str = "clean"
    mode: str = "classifier"
    sample_rate: float = 250.0

    def __post_init__(self):
        for f in ("cnn_layers", "cnn_channels", "conv_kernel", "conv_stride", "conv_dilation",
                  "pool_kernel", "pool_stride", "pool_dilation", "rnn_layers", "rnn_hidden"):
            v = getattr(self, f)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ParameterError(f"{f} must be a positive integer, got {v!r}")
        if self.inputs not in INPUT_CHOICES:
            raise ParameterError(f"inputs must be one of {sorted(INPUT_CHOICES)}, got {self.inputs!r}")
        if self.mode not in MODE_CHOICES:
            raise ParameterError(f"mode must be one of {MODE_CHOICES}, got {self.mode!r}")
        if self.window_size_s <= 0 or self.dilation_s <= 0 or self.sample_rate <= 0:
            raise ParameterError("window_size_s, dilation_s and sample_rate must be positive")
        if self.window_samples < 1 or self.dilation_samples < 1:
            raise ParameterError("window and dilation must span at least one sample")
        if self.cnn_output_length() < 1:
            raise ParameterError(
                f"a {self.window_samples}-sample window is too short for {self.cnn_layers} conv/pool stages")

    @property
    def window_samples(self) -> int:
        return int(round(self.window_size_s * self.sample_rate))

    @property
    def dilation_samples(self) -> int:
        return int(round(self.dilation_s * self.sample_rate))

    @property
    def n_inputs(self) -> int:
        return INPUT_CHOICES[self.inputs]

    def cnn_lengths(self) -> list[int]:
        """Sequence length after each conv+pool stage, starting with the window length."""
        out = [self.window_samples]
        n = self.window_samples
        for _ in range(self.cnn_layers):
            n = L.conv_output_length(n, self.conv_kernel, self.conv_stride, self.conv_dilation)
            n = L.conv_output_length(n, self.pool_kernel, self.pool_stride, self.pool_dilation)
            out.append(n)
        return out

    def cnn_output_length(self) -> int:
        return self.cnn_lengths()[-1]

    @property
    def feature_size(self) -> int:
        """Flattened CNN output per branch, i.e. the GRU input width."""
        return self.cnn_output_length() * self.cnn_channels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown NetworkSpec field(s): {sorted(unknown)}")
        return cls(**d)


def _param_shapes(spec: NetworkSpec) -> list[tuple[str, tuple[int, ...]]]:
    """Parameter names and shapes in declaration (serialization) order."""
    shapes = []
    C, K, H = spec.cnn_channels, spec.conv_kernel, spec.rnn_hidden
    for br in range(spec.n_inputs):
        c_in = 1
        for i in range(spec.cnn_layers):
            shapes.append((f"b{br}.conv{i}.weight", (C, c_in, K)))
            shapes.append((f"b{br}.conv{i}.bias", (C,)))
            c_in = C
        n_in = spec.feature_size
        for j in range(spec.rnn_layers):
            shapes.append((f"b{br}.gru{j}.W", (3 * H, n_in)))
            shapes.append((f"b{br}.gru{j}.U", (3 * H, H)))
            shapes.append((f"b{br}.gru{j}.b", (3 * H,)))
            n_in = H
    shapes.append(("dense.weight", (1, spec.n_inputs * H)))
    shapes.append(("dense.bias", (1,)))
    return shapes


def count_parameters(spec: NetworkSpec) -> int:
    """Exact number of trainable scalars.

    Per branch: ``C (c_in K + 1)`` per conv layer, ``3 (H n_in + H H + H)``
    per GRU layer; then ``n_branches H + 1`` for the dense output.
    """
    C, K, H = spec.cnn_channels, spec.conv_kernel, spec.rnn_hidden
    conv = C * (K + 1) + (spec.cnn_layers - 1) * C * (C * K + 1)
    gru = 3 * (H * spec.feature_size + H * H + H) + (spec.rnn_layers - 1) * 3 * (2 * H * H + H)
    return spec.n_inputs * (conv + gru) + spec.n_inputs * H + 1


class Network:
    """Parameters plus forward/backward passes for a :class:`NetworkSpec`.

    Parameters
    ----------
    spec : NetworkSpec
    params : dict of str to ndarray, optional
        Pre-built tensors; must match the spec's shapes exactly.
    dtype : numpy dtype
        float32 for training speed, float64 for exact equivalence checks.
    """

    def __init__(self, spec: NetworkSpec, params: dict | None = None, dtype=np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        shapes = _param_shapes(spec)
        if params is None:
            params = {name: np.zeros(shape, dtype=self.dtype) for name, shape in shapes}
        else:
            expected = dict(shapes)
            if set(params) != set(expected):
                raise ShapeError(f"parameter names differ from spec: {sorted(set(params) ^ set(expected))}")
            for name, shape in shapes:
                if tuple(params[name].shape) != shape:
                    raise ShapeError(f"{name}: expected shape {shape}, got {params[name].shape}")
            params = {name: np.ascontiguousarray(params[name], dtype=self.dtype) for name, _ in shapes}
        self.params = params

    # ----------------------------------------------------------- construction

    @classmethod
    def initialize(cls, spec: NetworkSpec, seed=None, dtype=np.float32) -> "Network":
        """Seeded uniform fan-in initialization.

        Conv weights use the Kaiming uniform bound ``sqrt(6 / fan_in)`` with zero
        biases; GRU input weights ``sqrt(3 / n_in)``; recurrent weights, GRU
        biases and the dense layer ``1 / sqrt(fan_in)``.
        """
        rng = check_random_state(seed)
        params = {}
        for name, shape in _param_shapes(spec):
            if ".conv" in name:
                if name.endswith("bias"):
                    # zero biases keep the ReLU stack positively homogeneous at initialization
                    params[name] = np.zeros(shape)
                    continue
                c_in = 1 if ".conv0." in name else spec.cnn_channels
                bound = np.sqrt(6.0 / (c_in * spec.conv_kernel))
            elif name.endswith(".W"):
                bound = np.sqrt(3.0 / shape[1])
            elif ".gru" in name:
                bound = 1.0 / np.sqrt(spec.rnn_hidden)
            else:
                bound = 1.0 / np.sqrt(spec.n_inputs * spec.rnn_hidden)
            params[name] = rng.uniform(-bound, bound, size=shape)
        return cls(spec, params, dtype=dtype)

    @classmethod
    def zeros(cls, spec: NetworkSpec, dtype=np.float32) -> "Network":
        return cls(spec, None, dtype=dtype)

    def astype(self, dtype) -> "Network":
        return Network(self.spec, {k: v.astype(dtype) for k, v in self.params.items()}, dtype=dtype)

    def copy(self) -> "Network":
        return Network(self.spec, {k: v.copy() for k, v in self.params.items()}, dtype=self.dtype)

    def n_parameters(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def parameter_names(self) -> list[str]:
        return [name for name, _ in _param_shapes(self.spec)]

    def initial_state(self, batch: int = 1) -> np.ndarray:
        """Zero hidden state, shape ``(n_branches, rnn_layers, batch, H)``."""
        s = self.spec
        return np.zeros((s.n_inputs, s.rnn_layers, batch, s.rnn_hidden), dtype=self.dtype)

    def output(self, logits):
        """Map raw dense output to the detection score."""
        return L.sigmoid(logits) if self.spec.mode == "classifier" else np.asarray(logits)

    # ------------------------------------------------------------------- CNN

    def _cnn_forward(self, br: int, x: np.ndarray, dropout: float, rng, keep: bool):
        """``x``: (N, W) windows of one input -> flattened features (N, F)."""
        s, p = self.spec, self.params
        h = x[:, :, None]
        caches = []
        for i in range(s.cnn_layers):
            y, c_conv = L.conv1d_cl(h, p[f"b{br}.conv{i}.weight"], p[f"b{br}.conv{i}.bias"],
                                    s.conv_stride, s.conv_dilation)
            active = y > 0
            y = np.maximum(y, 0, out=y)
            y, c_pool = L.maxpool1d_cl(y, s.pool_kernel, s.pool_stride, s.pool_dilation)
            mask = None
            if dropout > 0 and i > 0:
                mask = L.dropout_mask(y.shape, dropout, rng, self.dtype)
                y = y * mask
            if keep:
                caches.append((c_conv, active, c_pool, mask))
            h = y
        return h.reshape(h.shape[0], -1), caches

    def _cnn_backward(self, br: int, dfeat: np.ndarray, caches, grads: dict, need_dx: bool):
        s = self.spec
        d = dfeat.reshape(dfeat.shape[0], s.cnn_output_length(), s.cnn_channels)
        for i in range(s.cnn_layers - 1, -1, -1):
            c_conv, active, c_pool, mask = caches[i]
            if mask is not None:
                d = d * mask
            d = L.maxpool1d_cl_backward(d, c_pool)
            d = d * active
            d, dW, db = L.conv1d_cl_backward(d, c_conv, need_dx=need_dx or i > 0)
            grads[f"b{br}.conv{i}.weight"] += dW
            grads[f"b{br}.conv{i}.bias"] += db
        return None if d is None else d[:, :, 0]

    # ------------------------------------------------------------------- GRU

    def _gru_forward(self, br: int, X: np.ndarray, h0: np.ndarray, dropout: float, rng, keep: bool):
        """``X``: (B, T, F), ``h0``: (rnn_layers, B, H) -> outputs (B, T, H), h_T, caches."""
        s, p = self.spec, self.params
        B, T, _ = X.shape
        inp = X
        h_last = np.empty_like(h0)
        caches = []
        for j in range(s.rnn_layers):
            W, U, b = p[f"b{br}.gru{j}.W"], p[f"b{br}.gru{j}.U"], p[f"b{br}.gru{j}.b"]
            XP = inp @ W.T
            h = h0[j]
            outs = np.empty((B, T, s.rnn_hidden), dtype=self.dtype)
            steps = []
            for t in range(T):
                h, c = L.gru_cell_forward(XP[:, t], h, U, b)
                outs[:, t] = h
                if keep:
                    steps.append(c)
            h_last[j] = h
            mask = None
            if dropout > 0:
                mask = L.dropout_mask(outs.shape, dropout, rng, self.dtype)
                outs = outs * mask
            if keep:
                caches.append((inp, steps, mask))
            inp = outs
        return inp, h_last, caches

    def _gru_backward(self, br: int, d_out: np.ndarray, caches, grads: dict) -> np.ndarray:
        """``d_out``: (B, T, H) gradient of the last layer's outputs -> gradient of its input."""
        p = self.params
        d = d_out
        for j in range(len(caches) - 1, -1, -1):
            inp, steps, mask = caches[j]
            W, U = p[f"b{br}.gru{j}.W"], p[f"b{br}.gru{j}.U"]
            if mask is not None:
                d = d * mask
            B, T, H = d.shape
            dXP = np.empty((B, T, 3 * H), dtype=d.dtype)
            dh = np.zeros((B, H), dtype=d.dtype)
            dU = grads[f"b{br}.gru{j}.U"]
            db = grads[f"b{br}.gru{j}.b"]
            for t in range(T - 1, -1, -1):
                dxp, dh, dU_t, db_t = L.gru_cell_backward(dh + d[:, t], steps[t], U)
                dXP[:, t] = dxp
                dU += dU_t
                db += db_t
            grads[f"b{br}.gru{j}.W"] += dXP.reshape(B * T, 3 * H).T @ inp.reshape(B * T, -1)
            d = dXP @ W
        return d

    # -------------------------------------------------------------- sequences

    def _check_sequence(self, X: np.ndarray) -> np.ndarray:
        s = self.spec
        X = np.asarray(X, dtype=self.dtype)
        if X.ndim != 4 or X.shape[2] != s.n_inputs or X.shape[3] != s.window_samples:
            raise ShapeError(
                f"expected (batch, time, {s.n_inputs}, {s.window_samples}) windows, got {X.shape}")
        return X

    def forward(self, X, h0=None, *, training: bool = False, dropout: float = 0.0, rng=None,
                keep_cache: bool = False, all_steps: bool = False):
        """Run window sequences through the network.

        Parameters
        ----------
        X : ndarray (B, T, n_inputs, window_samples)
        h0 : ndarray (n_branches, rnn_layers, B, H), optional
        training : bool
            Enables dropout (with probability ``dropout``).
        all_steps : bool
            Return logits for every step ``(B, T)`` instead of the last ``(B,)``.

        Returns
        -------
        logits, h_T, cache
        """
        X = self._check_sequence(X)
        s, p = self.spec, self.params
        B, T = X.shape[:2]
        h0 = self.initial_state(B) if h0 is None else np.asarray(h0, dtype=self.dtype)
        if h0.shape != (s.n_inputs, s.rnn_layers, B, s.rnn_hidden):
            raise ShapeError(f"hidden state must have shape {(s.n_inputs, s.rnn_layers, B, s.rnn_hidden)}")
        rate = dropout if training else 0.0
        rng = check_random_state(rng) if rate > 0 else None
        h_T = np.empty_like(h0)
        tops, cache = [], []
        for br in range(s.n_inputs):
            feats, c_cnn = self._cnn_forward(br, X[:, :, br].reshape(B * T, -1), rate, rng, keep_cache)
            out, h_T[br], c_gru = self._gru_forward(br, feats.reshape(B, T, -1), h0[br], rate, rng, keep_cache)
            tops.append(out)
            cache.append((c_cnn, c_gru))
        top = np.concatenate(tops, axis=-1)
        logits = top @ p["dense.weight"][0] + p["dense.bias"][0]
        result = logits if all_steps else logits[:, -1]
        return result, h_T, (cache, top, all_steps, X.shape) if keep_cache else None

    def backward(self, dlogits, cache, need_input_grad: bool = False):
        """Gradients of a scalar loss given ``dloss/dlogits``.

        Returns ``(grads, dX)``; ``dX`` is None unless ``need_input_grad``.
        """
        if cache is None:
            raise ParameterError("forward must be called with keep_cache=True before backward")
        caches, top, all_steps, xshape = cache
        s, p = self.spec, self.params
        B, T = xshape[:2]
        H = s.rnn_hidden
        dl = np.zeros((B, T), dtype=self.dtype)
        if all_steps:
            dl[:] = dlogits
        else:
            dl[:, -1] = dlogits
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        grads["dense.weight"][0] = np.einsum("bt,bth->h", dl, top)
        grads["dense.bias"][0] = dl.sum()
        dtop = dl[:, :, None] * p["dense.weight"][0]
        dX = np.zeros(xshape, dtype=self.dtype) if need_input_grad else None
        for br in range(s.n_inputs):
            c_cnn, c_gru = caches[br]
            dfeat = self._gru_backward(br, dtop[:, :, br * H:(br + 1) * H], c_gru, grads)
            dx = self._cnn_backward(br, dfeat.reshape(B * T, -1), c_cnn, grads, need_input_grad)
            if need_input_grad:
                dX[:, :, br] = dx.reshape(B, T, -1)
        return grads, dX

    # -------------------------------------------------------------- inference

    def forward_window(self, window, h=None):
        """One inference step on a single window.

        Parameters
        ----------
        window : ndarray (n_inputs, window_samples) or (window_samples,) for one input
        h : ndarray (n_branches, rnn_layers, H), optional

        Returns
        -------
        (y, h') with ``y`` a float score.
        """
        s = self.spec
        w = np.asarray(window, dtype=self.dtype)
        if w.ndim == 1:
            w = w[None]
        if w.shape != (s.n_inputs, s.window_samples):
            raise ShapeError(f"window must have shape {(s.n_inputs, s.window_samples)}, got {w.shape}")
        h0 = None if h is None else np.asarray(h, dtype=self.dtype)[:, :, None, :]
        logit, h_new, _ = self.forward(w[None, None], h0)
        return float(self.output(logit)[0]), h_new[:, :, 0, :]

    def window_features(self, windows: np.ndarray, chunk: int = 2048) -> list[np.ndarray]:
        """Flattened CNN features per branch for ``(n, n_inputs, W)`` windows, computed in chunks."""
        s = self.spec
        windows = np.asarray(windows, dtype=self.dtype)
        n = windows.shape[0]
        out = [np.empty((n, s.feature_size), dtype=self.dtype) for _ in range(s.n_inputs)]
        for lo in range(0, n, chunk):
            hi = min(n, lo + chunk)
            for br in range(s.n_inputs):
                out[br][lo:hi], _ = self._cnn_forward(br, windows[lo:hi, br], 0.0, None, False)
        return out

    def scan_interleaved(self, windows, K: int, state=None):
        """Run consecutive windows through ``K`` interleaved hidden states.

        Window ``j`` uses slot ``j mod K`` of ``state`` (shape
        ``(K, n_branches, rnn_layers, H)``), exactly like ``K`` independent
        networks each seeing every ``K``-th window. Returns ``(scores, state)``
        where ``state`` slot order is unchanged (slot ``j mod K`` for window ``j``).
        """
        s = self.spec
        windows = np.asarray(windows, dtype=self.dtype)
        if windows.ndim != 3 or windows.shape[1:] != (s.n_inputs, s.window_samples):
            raise ShapeError(f"windows must have shape (n, {s.n_inputs}, {s.window_samples}), got {windows.shape}")
        n = windows.shape[0]
        if state is None:
            state = np.zeros((K, s.n_inputs, s.rnn_layers, s.rnn_hidden), dtype=self.dtype)
        state = np.array(state, dtype=self.dtype)
        if state.shape != (K, s.n_inputs, s.rnn_layers, s.rnn_hidden):
            raise ShapeError(f"state must have shape {(K, s.n_inputs, s.rnn_layers, s.rnn_hidden)}")
        if n == 0:
            return np.zeros(0, dtype=self.dtype), state
        feats = self.window_features(windows)
        T = -(-n // K)
        pad = T * K - n
        tops = []
        for br in range(s.n_inputs):
            F = feats[br]
            if pad:
                F = np.concatenate([F, np.zeros((pad, F.shape[1]), dtype=self.dtype)])
            # (T, K, F) -> (K, T, F): stream k takes windows k, k+K, ...
            seq = F.reshape(T, K, -1).transpose(1, 0, 2)
            h0 = state[:, br].transpose(1, 0, 2)
            full = T if pad == 0 else T - 1
            out = np.empty((K, T, s.rnn_hidden), dtype=self.dtype)
            out_full, h_full, _ = self._gru_forward(br, seq[:, :full], np.ascontiguousarray(h0), 0.0, None, False)
            out[:, :full] = out_full
            h_end = h_full
            if pad:
                r = K - pad
                out_r, h_r, _ = self._gru_forward(br, seq[:r, full:], np.ascontiguousarray(h_full[:, :r]),
                                                  0.0, None, False)
                out[:r, full:] = out_r
                out[r:, full:] = 0
                h_end = h_full.copy()
                h_end[:, :r] = h_r
            state[:, br] = h_end.transpose(1, 0, 2)
            tops.append(out)
        top = np.concatenate(tops, axis=-1)
        logits = (top @ self.params["dense.weight"][0] + self.params["dense.bias"][0]).transpose(1, 0).reshape(-1)
        return self.output(logits[:n]), state

    def predict_sequences(self, X, batch: int = 512) -> np.ndarray:
        """Scores at the last step of each ``(B, T, n_inputs, W)`` sequence, batched."""
        X = self._check_sequence(X)
        out = np.empty(X.shape[0], dtype=self.dtype)
        for lo in range(0, X.shape[0], batch):
            logits, _, _ = self.forward(X[lo:lo + batch])
            out[lo:lo + batch] = self.output(logits)
        return out

    def __repr__(self) -> str:
        return f"Network({self.spec.inputs}, {self.spec.mode}, {self.n_parameters()} parameters)"


def forward_window(net: Network, window, h=None):
    """Functional alias of :meth:`Network.forward_window`."""
    return net.forward_window(window, h)


def spec_to_json(spec: NetworkSpec) -> str:
    return json.dumps(spec.to_dict(), sort_keys=True)

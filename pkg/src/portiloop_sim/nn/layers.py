"""Forward/backward primitives.

Internally sequences are channels-last, ``(N, L, C)``: the im2col matrix of a
convolution then feeds one GEMM and its output needs no transpose. The public
:func:`conv1d_forward` accepts the usual ``(C, L)`` / ``(N, C, L)`` layout.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ShapeError

__all__ = [
    "conv_output_length",
    "conv1d_forward",
    "conv1d_cl",
    "conv1d_cl_backward",
    "maxpool1d_cl",
    "maxpool1d_cl_backward",
    "relu",
    "sigmoid",
    "dense_forward",
    "dense_backward",
    "gru_step",
    "gru_cell_forward",
    "gru_cell_backward",
    "dropout_mask",
    "bce_with_logits",
    "binary_cross_entropy",
    "mse_loss",
]


def conv_output_length(length: int, kernel: int, stride: int = 1, dilation: int = 1) -> int:
    """Output length of a valid (unpadded) 1-D convolution or pooling."""
    span = (kernel - 1) * dilation + 1
    if length < span:
        return 0
    return (length - span) // stride + 1


# --------------------------------------------------------------------- conv


def _taps_last(W: np.ndarray) -> np.ndarray:
    """``(O, C, K)`` kernel as an ``(O, K * C)`` matrix matching the patch layout."""
    O, C, K = W.shape
    return W.transpose(0, 2, 1).reshape(O, K * C)


def conv1d_cl(x: np.ndarray, W: np.ndarray, b: np.ndarray, stride: int = 1, dilation: int = 1):
    """Valid cross-correlation. ``x`` is ``(N, L, C_in)``, ``W`` is ``(C_out, C_in, K)``.

    Returns ``(y, cache)`` with ``y`` of shape ``(N, L_out, C_out)``.
    """
    if x.ndim != 3:
        raise ShapeError(f"expected (N, L, C) input, got shape {x.shape}")
    N, L, C = x.shape
    O, C_w, K = W.shape
    if C != C_w:
        raise ShapeError(f"input has {C} channels, kernel expects {C_w}")
    span = (K - 1) * dilation + 1
    L_out = conv_output_length(L, K, stride, dilation)
    if L_out < 1:
        raise ShapeError(f"input length {L} shorter than kernel span {span}")
    # (N, L_out, K, C) patch layout keeps every tap's channels contiguous
    patches = sliding_window_view(x, span, axis=1)[:, : (L_out - 1) * stride + 1 : stride, :, ::dilation]
    cols = patches.transpose(0, 1, 3, 2).reshape(N * L_out, K * C)
    y = cols @ _taps_last(W).T
    y += b
    return y.reshape(N, L_out, O), (cols, x.shape, W, stride, dilation)


def conv1d_cl_backward(dy: np.ndarray, cache, need_dx: bool = True):
    cols, xshape, W, stride, dilation = cache
    N, L, C = xshape
    O, _, K = W.shape
    L_out = dy.shape[1]
    dy2 = dy.reshape(N * L_out, O)
    dW = (dy2.T @ cols).reshape(O, K, C).transpose(0, 2, 1)
    db = dy2.sum(axis=0)
    if not need_dx:
        return None, dW, db
    dcols = (dy2 @ _taps_last(W)).reshape(N, L_out, K, C)
    dx = np.zeros(xshape, dtype=dy.dtype)
    stop = (L_out - 1) * stride + 1
    for k in range(K):
        off = k * dilation
        dx[:, off:off + stop:stride, :] += dcols[:, :, k, :]
    return dx, dW, db


def conv1d_forward(x, W, b, stride: int = 1, dilation: int = 1) -> np.ndarray:
    """Valid 1-D cross-correlation plus bias on ``(C, L)`` or ``(N, C, L)`` input.

    >>> conv1d_forward(np.array([[1., 2., 3., 4.]]), np.array([[[1., 1.]]]), np.array([1.]))
    array([[4., 6., 8.]])
    """
    x = np.asarray(x)
    W = np.asarray(W)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    if x.ndim != 3:
        raise ShapeError(f"expected (C, L) or (N, C, L) input, got shape {x.shape}")
    y, _ = conv1d_cl(np.ascontiguousarray(x.transpose(0, 2, 1)), W, np.asarray(b), stride, dilation)
    y = y.transpose(0, 2, 1)
    return y[0] if squeeze else y


# ------------------------------------------------------------------ pooling


def maxpool1d_cl(x: np.ndarray, kernel: int = 1, stride: int = 1, dilation: int = 1):
    """Max pooling over the length axis of ``(N, L, C)``; identity when kernel == stride == 1."""
    if kernel == 1 and stride == 1:
        return x, None
    N, L, C = x.shape
    span = (kernel - 1) * dilation + 1
    L_out = conv_output_length(L, kernel, stride, dilation)
    if L_out < 1:
        raise ShapeError(f"input length {L} shorter than pooling span {span}")
    win = sliding_window_view(x, span, axis=1)[:, : (L_out - 1) * stride + 1 : stride, :, ::dilation]
    arg = win.argmax(axis=-1)
    y = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return y, (arg, x.shape, kernel, stride, dilation)


def maxpool1d_cl_backward(dy: np.ndarray, cache):
    if cache is None:
        return dy
    arg, xshape, kernel, stride, dilation = cache
    N, L_out, C = dy.shape
    dx = np.zeros(xshape, dtype=dy.dtype)
    pos = np.arange(L_out)[None, :, None] * stride + arg * dilation
    n_idx = np.arange(N)[:, None, None]
    c_idx = np.arange(C)[None, None, :]
    np.add.at(dx, (n_idx, pos, c_idx), dy)
    return dx


# -------------------------------------------------------------- activations


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def sigmoid(x):
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.result_type(x, np.float32))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# -------------------------------------------------------------------- dense


def dense_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    if x.shape[-1] != W.shape[1]:
        raise ShapeError(f"dense layer expects {W.shape[1]} inputs, got {x.shape[-1]}")
    return x @ W.T + b


def dense_backward(dy: np.ndarray, x: np.ndarray, W: np.ndarray):
    """Returns ``(dx, dW, db)`` for ``y = x W^T + b`` with 2-D ``x``."""
    return dy @ W, dy.T @ x, dy.sum(axis=0)


# ---------------------------------------------------------------------- GRU


def gru_cell_forward(xp: np.ndarray, h: np.ndarray, U: np.ndarray, b: np.ndarray):
    """One GRU step given the precomputed input projection ``xp = x W^T``.

    Gate rows are stacked ``[z; r; n]``::

        z  = sigmoid(Wz x + Uz h + bz)
        r  = sigmoid(Wr x + Ur h + br)
        n  = tanh(Wn x + r * (Un h + bn))
        h' = (1 - z) * n + z * h
    """
    H = h.shape[-1]
    hp = h @ U.T
    zr = sigmoid(xp[..., : 2 * H] + hp[..., : 2 * H] + b[: 2 * H])
    z, r = zr[..., :H], zr[..., H:]
    hn = hp[..., 2 * H:] + b[2 * H:]
    n = np.tanh(xp[..., 2 * H:] + r * hn)
    h_new = (1.0 - z) * n + z * h
    return h_new, (h, z, r, n, hn)


def gru_cell_backward(dh_new: np.ndarray, cache, U: np.ndarray):
    """Returns ``(dxp, dh, dU, db)``; ``dxp`` is the gradient w.r.t. ``x W^T``."""
    h, z, r, n, hn = cache
    dn = dh_new * (1.0 - z)
    dz = dh_new * (h - n)
    da_n = dn * (1.0 - n * n)
    dr = da_n * hn
    dhn = da_n * r
    da_z = dz * z * (1.0 - z)
    da_r = dr * r * (1.0 - r)
    dhp = np.concatenate([da_z, da_r, dhn], axis=-1)
    dxp = np.concatenate([da_z, da_r, da_n], axis=-1)
    dh = dh_new * z + dhp @ U
    dU = dhp.T @ h
    db = dhp.sum(axis=0)
    return dxp, dh, dU, db


def gru_step(W: np.ndarray, U: np.ndarray, b: np.ndarray, x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Single GRU update ``h' = GRU(x, h)`` for vectors or batches."""
    x = np.asarray(x)
    h = np.asarray(h)
    if x.shape[-1] != W.shape[1] or h.shape[-1] != U.shape[1] or W.shape[0] != 3 * U.shape[1]:
        raise ShapeError(f"GRU shapes mismatch: x {x.shape}, h {h.shape}, W {W.shape}, U {U.shape}")
    h_new, _ = gru_cell_forward(x @ W.T, h, U, b)
    return h_new


# ------------------------------------------------------------------ dropout


def dropout_mask(shape, p: float, rng: np.random.Generator, dtype=np.float32) -> np.ndarray:
    """Inverted-dropout mask: zeros with probability ``p``, else ``1 / (1 - p)``."""
    if p <= 0:
        return np.ones(shape, dtype=dtype)
    keep = rng.random(shape, dtype=np.float32) >= p
    return keep.astype(dtype) * np.asarray(1.0 / (1.0 - p), dtype=dtype)


# ------------------------------------------------------------------- losses


def bce_with_logits(logits: np.ndarray, targets: np.ndarray):
    """Mean binary cross-entropy of ``sigmoid(logits)``; returns ``(loss, dloss/dlogits)``."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    loss = np.mean(np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z))))
    grad = (sigmoid(z) - y) / z.size
    return float(loss), grad


def binary_cross_entropy(probs, targets, eps: float = 1e-12):
    """Mean binary cross-entropy on probabilities; returns ``(loss, dloss/dprobs)``.

    >>> round(binary_cross_entropy(np.array([0.5]), np.array([1.0]))[0], 12) == round(np.log(2), 12)
    True
    """
    p = np.clip(np.asarray(probs, dtype=np.float64), eps, 1 - eps)
    y = np.asarray(targets, dtype=np.float64)
    loss = -np.mean(y * np.log(p) + (1 - y) * np.log1p(-p))
    grad = (p - y) / (p * (1 - p)) / p.size
    return float(loss), grad


def mse_loss(pred, targets):
    d = np.asarray(pred, dtype=np.float64) - np.asarray(targets, dtype=np.float64)
    return float(np.mean(d * d)), 2.0 * d / d.size

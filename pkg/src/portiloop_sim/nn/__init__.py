"""Minimal neural engine for the spindle detector network."""
from .attribution import integrated_gradients, network_attributions
from .inference import interleave_factor, score_signal, strided_windows
from .layers import (
    bce_with_logits,
    binary_cross_entropy,
    conv1d_forward,
    dense_forward,
    dropout_mask,
    gru_step,
    mse_loss,
    sigmoid,
)
from .network import Network, NetworkSpec, count_parameters, forward_window
from .optim import AdamW, AdamWState
from .serialize import load_weights, save_weights
from .train import TrainConfig, TrainHistory, default_stride, train, validation_f1

__all__ = [
    "AdamW",
    "AdamWState",
    "Network",
    "NetworkSpec",
    "TrainConfig",
    "TrainHistory",
    "bce_with_logits",
    "binary_cross_entropy",
    "conv1d_forward",
    "count_parameters",
    "default_stride",
    "dense_forward",
    "dropout_mask",
    "forward_window",
    "gru_step",
    "integrated_gradients",
    "interleave_factor",
    "load_weights",
    "mse_loss",
    "network_attributions",
    "save_weights",
    "score_signal",
    "sigmoid",
    "strided_windows",
    "train",
    "validation_f1",
]

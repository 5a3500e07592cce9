from __future__ import annotations

import numpy as np
import pytest

from portiloop_sim.nn import Network, NetworkSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_spec():
    """Small network: 2 conv layers of 4 channels, GRU of 3 units, 32-sample windows."""
    return NetworkSpec(window_size_s=0.128, dilation_s=0.064, cnn_layers=2, cnn_channels=4, conv_kernel=5,
                       rnn_hidden=3)


@pytest.fixture
def tiny_net(tiny_spec):
    return Network.initialize(tiny_spec, seed=7, dtype=np.float64)


@pytest.fixture(scope="session")
def final_spec():
    return NetworkSpec()

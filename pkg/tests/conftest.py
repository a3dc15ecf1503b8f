import numpy as np
import pytest

from tattooed import SecretKey, WatermarkPayload, flatten, synth_model

# 4-layer dense network whose parameter count is exactly 198,656
REFERENCE_LAYERS = (784, 222, 88, 48, 10)

# ~14.5k parameters: the smallest fixture that can carry the 152-bit payload
# (504 spread bits x 25 processing-gain margin = 12,600)
SMALL_LAYERS = (96, 128, 16)

TEXT_PAYLOAD = b"TATTOOED watermark!"


@pytest.fixture(scope="session")
def owner_key():
    return SecretKey(bytes(range(64)))


@pytest.fixture(scope="session")
def text_payload():
    return WatermarkPayload(TEXT_PAYLOAD)


@pytest.fixture(scope="session")
def reference_container():
    return synth_model(REFERENCE_LAYERS, init_seed=2026)


@pytest.fixture(scope="session")
def reference_weights(reference_container):
    return flatten(reference_container)


@pytest.fixture(scope="session")
def small_container():
    return synth_model(SMALL_LAYERS, init_seed=11)


@pytest.fixture(scope="session")
def small_weights(small_container):
    return flatten(small_container)


def mlp_forward(layers, x):
    """Independent dense-network forward pass (ReLU hidden layers)."""
    h = x
    for i, (w, b) in enumerate(layers):
        h = h @ np.asarray(w, dtype=np.float64).T + np.asarray(b, dtype=np.float64)
        if i < len(layers) - 1:
            h = np.maximum(h, 0.0)
    return h

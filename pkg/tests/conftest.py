import numpy as np
import pytest

from aifgtm import data, model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_blobs():
    return data.generate_synthetic_dataset(4, 12, 8, seed=3, noise=4.0)


@pytest.fixture(scope="session")
def trained_small_mlp(small_blobs):
    m = model.MlpModel(small_blobs.image_shape, 4, hidden=16, seed=5)
    trained, acc = model.train(m, small_blobs, epochs=60, lr=0.05, seed=5)
    return trained, acc


def random_image(rng, shape=(8, 8, 3)):
    return np.rint(rng.uniform(0, 255, size=shape))


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: (len(k), k)):
            terminalreporter.write_line(ACCEPTANCE[key])

import numpy as np
import pytest

from src.cli.commands import toy_config as build_toy_config
from src.data.synthetic import gen_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_config():
    """L=16, T=4, C=2, P=4, two scales, m=2, k=1."""
    return build_toy_config()


@pytest.fixture
def sine_series():
    return gen_synthetic('sine', 400, C=2, period=8)


@pytest.fixture
def toy_csv(tmp_path):
    series = gen_synthetic('sine', 300, C=2, period=8, noise=0.05, seed=3)
    path = tmp_path / "toy.csv"
    lines = ["ch0,ch1"] + [f"{a!r},{b!r}" for a, b in series.values.tolist()]
    path.write_text("\n".join(lines) + "\n")
    return path

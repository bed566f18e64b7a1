import numpy as np
import pytest

from volterraboot import rng


@pytest.fixture
def gen():
    return rng.generator(20240601)


@pytest.fixture
def white_noise(gen):
    return gen.standard_normal(10_000)

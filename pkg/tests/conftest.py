import numpy as np
import pytest

from npb import spectral as sp
from npb.state import random_smooth_field


@pytest.fixture(scope="session")
def g16():
    return sp.Grid(16)


@pytest.fixture(scope="session")
def g32():
    return sp.Grid(32)


def smooth_field(g, seed, k0=2.0):
    """Zero-mean, band-limited random field with max |f| = 1."""
    return random_smooth_field(np.random.default_rng(seed), k0, g)


def sin_mode(g, k, amp=1.0, phase=0.0):
    x = g.coordinates()
    return amp * np.sin(sp.TWO_PI * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]) + phase)


def cos_mode(g, k, amp=1.0):
    return sin_mode(g, k, amp, np.pi / 2)

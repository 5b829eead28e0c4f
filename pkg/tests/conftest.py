import numpy as np
import pytest

from pitchscope.filterbank import design_bank

FS = 44100.0


@pytest.fixture(scope="session")
def bank():
    """Default 37-channel bank, shared across tests (design is pure)."""
    return design_bank()


@pytest.fixture(scope="session")
def make_tone():
    def _make(freq_hz, duration_s=1.0, f_s=FS, amplitude=1.0):
        t = np.arange(int(round(duration_s * f_s))) / f_s
        return amplitude * np.sin(2.0 * np.pi * freq_hz * t)
    return _make

import numpy as np
import pytest

from divray.spectral import SpectralGrid


def smooth_noise(grid: SpectralGrid, seed: int = 0, bandwidth: float = 0.25) -> np.ndarray:
    """Mean-free random field with spectrum confined below the Nyquist range.

    White noise filtered by a Gaussian envelope at `bandwidth` times the
    Nyquist frequency; suitable for multiplier-identity checks where
    self-conjugate bins carry no information.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(grid.sizes)
    zsq = sum(z**2 for z in grid.freq_meshgrid())
    nyq = min(np.pi / h for h in grid.spacing)
    envelope = np.exp(-zsq / (2.0 * (bandwidth * nyq) ** 2))
    envelope[zsq > (0.5 * nyq) ** 2] = 0.0  # hard cutoff: no self-conjugate bins
    out = np.real(np.fft.ifftn(np.fft.fftn(u) * envelope))
    out -= out.mean()
    return out / np.max(np.abs(out))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

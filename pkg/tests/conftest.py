import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dunkl_lab.roots import preset
from dunkl_lab.spectral import make_spectral_pair

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")


@pytest.fixture(scope="session")
def sp1():
    """Rank one, k = 1, a small band-limited setting."""
    return make_spectral_pair(preset("z2", 1.0), (-12.0, 12.0), 192)


@pytest.fixture(scope="session")
def sp0():
    return make_spectral_pair(preset("z2", 0.0), (-12.0, 12.0), 192)


@pytest.fixture(scope="session")
def sp2():
    return make_spectral_pair(preset("z2^2", (1.0, 0.5)), (-8.0, 8.0), 64)


def gaussian_packet(grid, center, width=1.0, freq=0.0):
    x = grid.nodes
    c = np.broadcast_to(np.asarray(center, dtype=float), (x.shape[1],))
    r2 = np.sum((x - c) ** 2, axis=1)
    return np.exp(-r2 / (2 * width ** 2) + 1j * freq * x[:, 0])

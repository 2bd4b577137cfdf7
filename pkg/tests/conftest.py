"""Shared geometry fixtures for the test suite."""

import numpy as np
import pytest

from aoaloc import NoiseModel, SensorArray, SourceLocation, synthesize_measurements
from aoaloc.presets import SITES_2D, SITES_3D_COPLANAR, SITES_3D_NONCOPLANAR


@pytest.fixture(scope="session")
def sites_2d():
    return SITES_2D.copy()


@pytest.fixture(scope="session")
def sites_3d():
    return SITES_3D_NONCOPLANAR.copy()


@pytest.fixture(scope="session")
def sites_3d_coplanar():
    return SITES_3D_COPLANAR.copy()


@pytest.fixture
def source_2d():
    return SourceLocation(coords=np.array([60.0, 10.0]))


@pytest.fixture
def source_3d():
    return SourceLocation(coords=np.array([60.0, 10.0, 10.0]))


def replicated_array(sites: np.ndarray, n: int) -> SensorArray:
    """The fixed-site deployment expanded to n sensors (n a multiple of 10)."""
    assert n % len(sites) == 0
    return SensorArray(positions=np.tile(sites, (n // len(sites), 1)))


def synth(sites, n, source, sigma_a, seed, sigma_e=None):
    """Convenience: replicated array plus one synthesized measurement set."""
    array = replicated_array(np.asarray(sites, dtype=float), n)
    src = SourceLocation(coords=np.asarray(source, dtype=float))
    noise = NoiseModel(sigma_a=sigma_a, sigma_e=sigma_e)
    return array, synthesize_measurements(array, src, noise, seed)

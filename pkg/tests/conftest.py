import numpy as np
import pytest

from pearcey_lab import ModelConfig, PointCache, default_grid

# The three-configuration battery used throughout: a symmetric two-threshold
# instance, a three-threshold asymmetric one, and a negative-tau variant.
STANDARD = ModelConfig(a=(-1.0, 1.0), k=(0.0, 0.5, 0.0), tau=1.0, s=0.0)
N3 = ModelConfig(a=(-2.0, 0.0, 1.5), k=(0.0, 0.3, 0.7, 0.0), tau=0.5, s=0.2)
TAU_NEG = ModelConfig(a=(-1.0, 1.0), k=(0.0, 0.5, 0.0), tau=-0.5, s=0.0)
DEGENERATE = ModelConfig(a=(-1.0, 1.0), k=(0.0, 0.0, 0.0), tau=1.0, s=0.0,
                         allow_degenerate=True)


@pytest.fixture(scope="session")
def std_config():
    return STANDARD


@pytest.fixture(scope="session")
def n3_config():
    return N3


@pytest.fixture(scope="session")
def tau_neg_config():
    return TAU_NEG


@pytest.fixture(scope="session")
def degenerate_config():
    return DEGENERATE


@pytest.fixture(scope="session")
def battery():
    return [STANDARD, N3, TAU_NEG]


@pytest.fixture(scope="session")
def battery_caches():
    """One grid + operator cache per battery configuration, shared by all tests.

    Extents cover the widest finite-difference stencils and the 3x3 (s, tau)
    sub-grid of the PDE check, so every identity check can reuse the same
    factorizations.
    """
    out = {}
    for cfg in (STANDARD, N3, TAU_NEG):
        grid = default_grid(cfg, s_extent=0.5, tau_extent=0.4)
        out[cfg] = (grid, PointCache(cfg, grid))
    return out


@pytest.fixture(scope="session")
def std_grid(battery_caches):
    return battery_caches[STANDARD][0]


@pytest.fixture(scope="session")
def std_cache(battery_caches):
    return battery_caches[STANDARD][1]

import numpy as np
import pytest

from moebspace.generators import gen_circle, zoo
from moebspace.geometry import extend_ray
from moebspace.hull import build_sample


@pytest.fixture(scope="session")
def spaces():
    return zoo()


@pytest.fixture(scope="session")
def tripod(spaces):
    return spaces["discrete-3"]


@pytest.fixture(scope="session")
def circle16_rays():
    """Depth-12 rays from the base of circle-16 toward every point."""
    sp = gen_circle(16)
    o = sp.base_point
    return sp, {xi: extend_ray(o, xi, 1.0, 12) for xi in range(16)}


@pytest.fixture(scope="session")
def circle8_sample():
    """Base, depth-10 rays toward all 8 points and 10 random points."""
    sp = gen_circle(8)
    return sp, build_sample(sp, rays=[(xi, 10, 1.0) for xi in range(8)], random=(10, 100, 2.0))

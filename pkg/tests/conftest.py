import numpy as np
import pytest

from fevec.materials import MaterialProps, Plane

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def unit_props():
    return MaterialProps(E=1.0, nu=0.0, conductivity=1.0, alpha=1.0, T0=0.0,
                         plane=Plane.STRESS)


@pytest.fixture
def steel_props():
    return MaterialProps(E=200000.0, nu=0.3, conductivity=0.05, alpha=1.2e-5,
                         T0=25.0, plane=Plane.STRESS)


def random_polygon(rng, n_v, scale=1.0, center=(0.0, 0.0), convex=False):
    """Star-shaped polygon with jittered radii; non-convex unless ``convex``.

    Angles keep a minimum separation so no edge degenerates.
    """
    gaps = rng.uniform(0.2, 1.0, n_v)
    angles = 2.0 * np.pi * np.cumsum(gaps) / gaps.sum()
    radii = np.ones(n_v) if convex else rng.uniform(0.45, 1.4, n_v)
    pts = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))
    return scale * pts + np.asarray(center)


def polygon_family(seed=42, count=200):
    """Seeded mixed family of convex and non-convex polygons, 3..10 vertices."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n_v = int(rng.integers(3, 11))
        scale = float(rng.uniform(0.2, 8.0))
        center = rng.uniform(-20.0, 20.0, 2)
        out.append(random_polygon(rng, n_v, scale, center, convex=(k % 3 == 0)))
    return out

import numpy as np
import pytest

from trailplan import HamiltonianConfig, SolverConfig, SpeedModel, make_synthetic

V0 = 1.11 * np.exp(-4.0 / 2345.0)  # walking speed on flat ground


@pytest.fixture(scope="session")
def model():
    return SpeedModel()


@pytest.fixture(scope="session")
def flat_field():
    return make_synthetic("flat", (0, 4, 0, 4), (81, 81))


@pytest.fixture(scope="session")
def plane_field():
    """E(x, y) = 0.3 x on [0,4]^2."""
    xs = np.linspace(0, 4, 81)
    heights = np.broadcast_to(0.3 * xs[:, None], (81, 81))
    from trailplan import ElevationField
    return ElevationField((0, 0), (0.05, 0.05), heights)


def small_solver_config(**overrides):
    kwargs = dict(box=(0, 4, 0, 4), N=40, M=40, K=1, T=0.8, sigma=0.0,
                  x_end=(2.0, 2.0), ham=HamiltonianConfig(n_ext_samples=4))
    kwargs.update(overrides)
    return SolverConfig(**kwargs)


def points_in_envelope(points, centers, radii) -> bool:
    """Is every point inside the union of per-step (rx, ry) ellipses?

    A zero-radius ellipse admits only its own center (coincident points).
    """
    points = np.asarray(points)
    centers = np.asarray(centers)
    rx = np.maximum(np.asarray(radii)[:, 0], 1e-300)
    ry = np.maximum(np.asarray(radii)[:, 1], 1e-300)
    for p in points:
        dx = (p[0] - centers[:, 0])
        dy = (p[1] - centers[:, 1])
        if ((dx == 0) & (dy == 0)).any():
            continue
        metric = (dx / rx) ** 2 + (dy / ry) ** 2
        if metric.min() > 1.0:
            return False
    return True

import numpy as np
import pytest

from handteleop import geometry as geo
from handteleop.calibration import CalibrationFrame, SharedMap


def random_rotation(rng) -> np.ndarray:
    axis = rng.normal(size=3)
    angle = rng.uniform(0, np.pi)
    return geo.axis_angle(axis, angle)


def random_frame(rng, lengths=None) -> CalibrationFrame:
    lx, ly = lengths if lengths is not None else rng.uniform(0.2, 0.6, size=2)
    r = random_rotation(rng)
    o = rng.uniform(-0.5, 0.5, size=3)
    return CalibrationFrame(o=o, ex=lx * r[:, 0], ey=ly * r[:, 1], ez=r[:, 2].copy())


def random_shared_map(rng, eta=None) -> SharedMap:
    lengths = rng.uniform(0.2, 0.6, size=2)
    return SharedMap(
        human=random_frame(rng, lengths),
        robot=random_frame(rng, lengths),
        eta=float(eta if eta is not None else rng.uniform(0.5, 2.0)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

import numpy as np
import pytest

from nhslip.constraints import ConstraintSet, FrictionSpec
from nhslip.geometry import MetricField, PotentialField
from nhslip.systems import DiskParams, SystemDef, disk_system


def sleigh_system(m=2.0, I=0.5, a=0.3, mu=1.5, epsilon=0.05, slope=0.0, analytic=True):
    """Chaplygin sleigh on q = (x, y, theta): knife edge at the origin, mass centre offset ``a``.

    The metric depends on theta, so its Christoffel symbols do not vanish.
    ``slope`` adds a linear potential ``slope * x``. With ``analytic=False`` the
    metric and constraint partials come from finite differences.
    """

    def G(q):
        c, s = np.cos(q[2]), np.sin(q[2])
        return np.array([[m, 0.0, -m * a * s], [0.0, m, m * a * c], [-m * a * s, m * a * c, I + m * a * a]])

    def A(q):
        return np.array([[-np.sin(q[2]), np.cos(q[2]), 0.0]])

    def dG(q):
        c, s = np.cos(q[2]), np.sin(q[2])
        out = np.zeros((3, 3, 3))
        out[2] = [[0.0, 0.0, -m * a * c], [0.0, 0.0, -m * a * s], [-m * a * c, -m * a * s, 0.0]]
        return out

    def dA(q):
        out = np.zeros((3, 1, 3))
        out[2, 0] = [-np.cos(q[2]), -np.sin(q[2]), 0.0]
        return out

    metric = MetricField(3, G, dG if analytic else None)
    cs = ConstraintSet(1, A, partials_at=dA if analytic else None)
    fs = FrictionSpec(lambda q: np.array([[mu]]), epsilon)
    pot = PotentialField(lambda q: slope * q[0], lambda q: np.array([slope, 0.0, 0.0]))
    return SystemDef("sleigh", 3, metric, pot, cs, fs)


def polar_metric():
    return MetricField(2, lambda q: np.diag([1.0, q[0] ** 2]))


@pytest.fixture
def disk():
    return disk_system(DiskParams())


@pytest.fixture
def disk01():
    return disk_system(DiskParams(epsilon=0.1))


@pytest.fixture
def disk_fd():
    return disk_system(DiskParams(), analytic=False)


@pytest.fixture
def sleigh():
    return sleigh_system()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

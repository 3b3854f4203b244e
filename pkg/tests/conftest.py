import sys

import numpy as np
import pytest

from xlwpt.geometry import Wall
from xlwpt.scenario import load_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(20231015)


@pytest.fixture(scope="session")
def hallway():
    return load_scenario("hallway")


def random_unit(rng, n=None):
    v = rng.standard_normal(3 if n is None else (n, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_wall(rng, name="", span=4.0, refl=1.0):
    """Random bounded wall in a 10 m cube around the origin."""
    n = random_unit(rng)
    a = np.cross(n, random_unit(rng))
    u = a / np.linalg.norm(a)
    v = np.cross(n, u)
    off = rng.uniform(-3, 3)
    c = rng.uniform(-2, 2, size=2)
    w = rng.uniform(0.5, span, size=2)
    limits = (c[0] - w[0], c[0] + w[0], c[1] - w[1], c[1] + w[1])
    return Wall(n, off, u, v, limits, refl, name)


def crc(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

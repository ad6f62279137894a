import numpy as np
import pytest

from cpa_auctions.distributions import (DerivedPriceToBeat, Exponential, LogNormal, PointMass, Power,
                                        Uniform)
from cpa_auctions.strategy import CpaProblem

CONTINUOUS = [Uniform(0.0, 1.0), Uniform(2.0, 3.0), Power(0.5), Power(2.0), Exponential(1.0),
              Exponential(3.0), LogNormal(0.0, 0.5), LogNormal(0.2, 1.2)]

ALL_DISTS = CONTINUOUS + [PointMass(0.7)]

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_distribution(rng):
    kind = rng.integers(4)
    if kind == 0:
        lo = rng.uniform(0, 1)
        return Uniform(lo, lo + rng.uniform(0.1, 2))
    if kind == 1:
        return Power(rng.uniform(0.3, 4))
    if kind == 2:
        return Exponential(rng.uniform(0.5, 3))
    return LogNormal(rng.uniform(-0.5, 0.5), rng.uniform(0.2, 1.0))


def random_cpa_problem(rng):
    value = random_distribution(rng)
    if rng.random() < 0.5:
        ptb = DerivedPriceToBeat(random_distribution(rng), int(rng.integers(1, 5)), rng.uniform(0.2, 3))
    else:
        ptb = random_distribution(rng)
    return CpaProblem(value, ptb, rng.uniform(0.2, 1.5))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

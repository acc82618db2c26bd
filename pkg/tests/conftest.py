import numpy as np
import pytest

from swiptcap import ConstraintSet, EhModel, HpaModel, SolveOptions


@pytest.fixture
def bypass():
    return HpaModel(bypass=True)


@pytest.fixture
def eh():
    return EhModel(b=0.5, h2=1.0)


@pytest.fixture
def fig6_constraints():
    # low-peak regime: A=2, P=1, vacuous energy floor
    return ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)


@pytest.fixture
def fig6_dist():
    from swiptcap import MassPointDistribution
    return MassPointDistribution(np.array([0.0, 2.0]),
                                 np.array([0.75, 0.25]), peak=2.0)


@pytest.fixture
def fast_opts():
    return SolveOptions(dx=0.05)

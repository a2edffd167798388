import math
import os

import matplotlib
matplotlib.use('Agg')

import pytest

from tethered_climb.climber import ClimbScenario
from tethered_climb.dynamics import RobotParams, calibrated, get_body
from tethered_climb.grip import GripModel
from tethered_climb.terrain import Asperity, TerrainParams, generate_patch
from tethered_climb.tether import TetherSpec, TetherSystem

CONF_DIR = os.path.join(os.path.dirname(__file__), '..', '..', 'conf')


@pytest.fixture
def mars():
    return get_body('Mars')


@pytest.fixture
def robot(mars):
    """Default robot with the thruster calibrated to the Mars hop datum."""
    return calibrated(RobotParams(), mars)


@pytest.fixture(scope='session')
def patch():
    return generate_patch(TerrainParams(), 1e-3, 1e-5)


@pytest.fixture
def ideal_asperities():
    """A wall every default spine can hook."""
    return [Asperity((0.0, 0.0, 0.0), 40e-6, math.pi / 2)]


@pytest.fixture
def climb_tethers():
    return TetherSystem.x_configuration(4, TetherSpec(200.0, 1.75, 25.0))


@pytest.fixture
def climb_scenario():
    return ClimbScenario(spines_per_robot=40)


@pytest.fixture
def grip_model():
    return GripModel()

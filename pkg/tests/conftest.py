import pytest

from mimosel.array_model import ArrayGeometry
from mimosel.interference_model import Clutter, Jammer, Scenario


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the slow acceptance tests')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: slow acceptance test')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_scenario():
    """3 x 3 array with one jammer and rank-2 clutter."""
    return Scenario(
        geometry=ArrayGeometry.non_overlapping(3, 3),
        theta_s=10.,
        target_power=0.,
        jammers=(Jammer(40., 10.),),
        clutter=Clutter(rank=2, span=(0., 60.), cnr=10.),
        noise_power=0.)


@pytest.fixture
def noise_scenario():
    return Scenario(
        geometry=ArrayGeometry.non_overlapping(2, 2),
        theta_s=0.,
        target_power=3.,
        noise_power=0.)


@pytest.fixture
def scenario_file(tmp_path):
    def write(text, name='test.scn'):
        path = tmp_path / name
        path.write_text(text)
        return path
    return write

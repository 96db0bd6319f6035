import numpy as np
import pytest

from redccr.grid import GridSpec, MomentumGrid, VacuumProfile, build_grid, make_profile


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def one_point():
    """k = (1, 0, 0, 1) with unit weight."""
    return build_grid(GridSpec(radii=[1.0], directions=[[0.0, 0.0, 1.0]], weight=1.0))


@pytest.fixture
def two_point():
    """|k| = 1, 2 along +z with unit weights."""
    return MomentumGrid.from_momenta([[0.0, 0.0, 1.0], [0.0, 0.0, 2.0]], [1.0, 1.0])


@pytest.fixture
def small_grid():
    return build_grid(GridSpec(0.5, 2.0, n_radial=2, n_polar=1, n_azimuth=2))


@pytest.fixture
def small_profile(small_grid):
    return make_profile(small_grid, "lognormal")


@pytest.fixture
def unit_profile(one_point):
    return VacuumProfile(one_point, np.array([1.0 + 0j]))


@pytest.fixture
def half_profile(two_point):
    return VacuumProfile(two_point, np.sqrt([0.5, 0.5]).astype(complex))


# one summary line per acceptance criterion, collected from test_acceptance.py
_CRITERIA = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _CRITERIA.append((props["criterion"], report.outcome, report.duration, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration, measured in sorted(_CRITERIA, key=lambda c: int(c[0].split(".")[0])):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  [{measured}] ({duration:.1f} s)")

import pytest

import singrid as sg


@pytest.fixture(scope="session")
def square():
    return sg.unit_cube(2)


@pytest.fixture(scope="session")
def cube3():
    return sg.unit_cube(3)


@pytest.fixture(scope="session")
def sigma1():
    return sg.sigma_one()


@pytest.fixture(scope="session")
def loglog2():
    return sg.loglog_profile(2)

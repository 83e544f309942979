import functools
import os

import pytest
from hypothesis import HealthCheck, settings

from hslab.core import family_params, make_params
from hslab.radial import closed_form_profile, shoot

settings.register_profile("hslab", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "hslab"))

# lines recorded by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def closed(N, family):
    par = family_params(N, family)
    return par, closed_form_profile(par)


@functools.lru_cache(maxsize=None)
def shot(N, s=None, p=None, tol=1e-9):
    par = make_params(N, s=s, p=p)
    return par, shoot(par, tol=tol)


@pytest.fixture(scope="session")
def profile_n3_s1():
    return shot(3, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import functools

import pytest
from hypothesis import settings

from morse_tower import scenario

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def _stock(name: str):
    return scenario.load(name)


@pytest.fixture(scope="session")
def stock():
    """Stock scenarios, loaded once per session so geometric caches are shared."""
    return _stock


# acceptance criteria record "criterion N: PASS/FAIL ..." lines here
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

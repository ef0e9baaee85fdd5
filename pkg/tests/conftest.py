"""Shared fixtures: the two named presets, loaded once per session."""

import pytest

from docksim import load_config


@pytest.fixture(scope="session")
def case1():
    return load_config("case1")


@pytest.fixture(scope="session")
def case2():
    return load_config("case2")

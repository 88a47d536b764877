"""
conftest.py
"""

import math

import pytest

from needles.geometry import ThrowConfig


@pytest.fixture
def config_n5():
    return ThrowConfig.from_ratios(5, 1 / 3, 1 / 4, math.pi / 10)


@pytest.fixture
def config_n3():
    return ThrowConfig.from_ratios(3, 1 / 3, 1 / 4, math.pi / 2)


@pytest.fixture
def reproducible_timestamp(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")

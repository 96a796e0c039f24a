"""Test fixtures."""

import pytest

from oracles import oracle_evaluate


@pytest.fixture
def oracle():
    return oracle_evaluate

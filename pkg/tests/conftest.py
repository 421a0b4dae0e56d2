"""Shared fixtures for the boltzlab tests."""

import pytest

from boltzlab.core.distributions import make_bi_maxwellian


@pytest.fixture
def bimodal():
    """Create a bi-Maxwellian with means +-2 e_1."""
    return make_bi_maxwellian(2, 0.5, [2.0, 0.0], 1.0, 0.5, [-2.0, 0.0], 1.0)

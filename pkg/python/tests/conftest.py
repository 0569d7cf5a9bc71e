"""
pytest configuration for nsdual tests.

Canonical markets and utilities with known closed-form solutions.
"""

import pytest

from nsdual.config import NsDualSettings
from nsdual.convex import Exponential, QuadraticShortfall
from nsdual.market import Claim, binomial_lattice, one_period


@pytest.fixture
def settings():
    """Default settings, independent of the environment cache."""
    return NsDualSettings()


@pytest.fixture
def trinomial():
    """S0 = 1, S1 in {0.5, 1, 2} with uniform P."""
    return one_period(1.0, [0.5, 1.0, 2.0])


@pytest.fixture
def binomial():
    """S0 = 1, up 2, down 0.5, P(up) = 1/2; the martingale measure has q_up = 1/3."""
    return binomial_lattice(1.0, 2.0, 0.5, periods=1, p_up=0.5)


@pytest.fixture
def two_period():
    """Two-period binomial lattice with the same factors."""
    return binomial_lattice(1.0, 2.0, 0.5, periods=2, p_up=0.5)


@pytest.fixture
def exponential():
    return Exponential(1.0)


@pytest.fixture
def quadratic():
    return QuadraticShortfall()


@pytest.fixture
def digital_up(trinomial):
    """Liability paying 1 in the up state."""
    return Claim.for_tree(trinomial, [0.0, 0.0, 1.0])

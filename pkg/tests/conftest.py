from fractions import Fraction as F

import pytest

from gwboot.offspring import OffspringDistribution, delta


@pytest.fixture
def delta2():
    return delta(2)


@pytest.fixture
def two_plus_five():
    """(3/5) delta_2 + (2/5) delta_5: a continuous onset plus one interior jump."""
    return OffspringDistribution(2, {2: F(3, 5), 5: F(2, 5)})


@pytest.fixture
def quad_well():
    """(13/18, 5/18) on {2, 3}: a single nu = 1 plateau at 1/10."""
    return OffspringDistribution(2, {2: F(13, 18), 3: F(5, 18)})


@pytest.fixture
def cubic_decay():
    """(3/4, 1/4) on {2, 3}: continuous with exponent 2."""
    return OffspringDistribution(2, {2: F(3, 4), 3: F(1, 4)})

import pytest
import sys
import os

# Add project root to sys.path so we can import 'hardy' and 'utils'
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from hardy.weights import Exponent, make_weights


@pytest.fixture(scope="session")
def cesaro():
    """Constant weights, 1000 terms (R_n = n). Shared, read-only."""
    return make_weights('const', 1000)


@pytest.fixture(scope="session")
def power_one():
    """lambda_n = n, 1000 terms (R_n = (n+1)/2)."""
    return make_weights('power:alpha=1', 1000)


@pytest.fixture(scope="session")
def harmonic():
    return make_weights('harmonic', 50)


@pytest.fixture(scope="session")
def p2():
    return Exponent(2.0)


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20240601)

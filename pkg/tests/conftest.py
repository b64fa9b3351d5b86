import warnings

import numpy as np
import pytest

from covertnoma import Scenario, generate_channels

# cvxpy re-warns on every inaccurate solve; the library audits residuals
# itself, so keep test logs readable
warnings.filterwarnings("ignore", message="Solution may be inaccurate")


@pytest.fixture(scope="session")
def small_scenario():
    """Fast but fully featured instance (both SDP branches exercised)."""
    return Scenario().with_overrides(num_elements=4, num_antennas=2)


@pytest.fixture(scope="session")
def small_channels(small_scenario):
    return generate_channels(small_scenario, trial=0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)

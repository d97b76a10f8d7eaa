import pytest
from hypothesis import HealthCheck, settings

from esoval.model import JumpSizeDistribution, MarketParams

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def market():
    return MarketParams(S0=10.0, K=10.0, r=0.05, q=0.015, sigma=0.2, T=10.0)


@pytest.fixture(scope="session")
def uniform():
    return JumpSizeDistribution.uniform()

import pytest
from hypothesis import HealthCheck, settings

from fabrictwin import (
    apply_named_configuration,
    build_reference_topology,
    default_calibrated_workloads,
)

settings.register_profile(
    "twin", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("twin")


@pytest.fixture(scope="session")
def topo():
    return build_reference_topology()


@pytest.fixture(scope="session")
def workloads(topo):
    return default_calibrated_workloads(topo)


@pytest.fixture(scope="session")
def named(topo):
    """Composition factory for the five reference configuration labels."""

    def build(label):
        return apply_named_configuration(topo, label)

    return build

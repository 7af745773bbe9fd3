import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bsdgeom import MetricField, parse_domain, standard_potential

settings.register_profile(
    "geometry",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("geometry")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def std_metric():
    def build(descriptor, K=1.0):
        d = parse_domain(descriptor, K)
        return MetricField(standard_potential(d), d)

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)

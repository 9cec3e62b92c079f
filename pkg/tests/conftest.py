import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import kreinfeller as kf

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if ACCEPTANCE_FILE in nodeid and getattr(rep, "when", "call") == "call":
                lines.append((nodeid.split("::")[-1], "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(lines):
            terminalreporter.write_line(f"{name}: {status}")


BUILTIN = {
    "lebesgue": kf.lebesgue,
    "cantor": lambda: kf.cantor(0.5, 0.5),
    "cantor37": lambda: kf.cantor(0.3, 0.7),
    "approx2": lambda: kf.cantor_approx(2),
    "mixture": lambda: kf.mixture(kf.cantor(0.5, 0.5), 0.1),
}


@pytest.fixture(params=sorted(BUILTIN))
def builtin(request):
    return BUILTIN[request.param]()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "quadswe",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("quadswe")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, gathered from ``record_property("criterion", ...)``."""
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", "call") != "call" and key != "error":
                continue
            for name, value in getattr(rep, "user_properties", []):
                if name == "criterion":
                    status = {"passed": "PASS", "xpassed": "PASS"}.get(key, "FAIL")
                    lines.append((value[0], f"criterion {value[0]} {status}: {value[1]}"))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)

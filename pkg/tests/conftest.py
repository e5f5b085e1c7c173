import os
import sys

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    import _verdicts

    if _verdicts.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_verdicts.LINES):
            terminalreporter.write_line(line)

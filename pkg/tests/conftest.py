import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Lines of the acceptance report, echoed again in the terminal summary."""
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = {}
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])

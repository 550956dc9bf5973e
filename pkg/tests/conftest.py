import pytest
from hypothesis import settings

from _support import classified, context

settings.register_profile("repo", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def gl23_sym1():
    """Sym^1 of GL(2, F_3) with the torus Levi (coregular)."""
    data = next(d for d in classified(2, 3) if d.dim == 2 and d.psi == (1, 0))
    return context(2, 3, data.label)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

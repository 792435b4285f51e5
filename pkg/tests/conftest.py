import pytest

from monostatic import bodies
from monostatic.spaces import SpaceKind

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"CRITERION {number:>2}: {'PASS' if passed else 'FAIL'} | {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def spherical():
    return SpaceKind.spherical()


@pytest.fixture(scope="session")
def hyperbolic():
    return SpaceKind.hyperbolic()


@pytest.fixture(scope="session")
def normed():
    return bodies.normed_space_3d()


@pytest.fixture(scope="session")
def family_spaces(spherical, hyperbolic, normed):
    """(space, R) pairs used for the K(c, d) family in each non-Euclidean geometry."""
    return [(spherical, 1.0), (hyperbolic, 0.5), (normed, 1.0)]

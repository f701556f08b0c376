import pytest

from hmcf import shapes

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def sphere642():
    return shapes.gen_sphere(1.0, resolution=642)


@pytest.fixture(scope="session")
def sphere2562():
    return shapes.gen_sphere(1.0, resolution=2562)


@pytest.fixture(scope="session")
def small_torus():
    return shapes.gen_drilled_torus(0.05, resolution=2000)


@pytest.fixture
def report():
    """Record one acceptance verdict line for the terminal summary."""

    def add(number, name, ok, detail=""):
        line = f"criterion {number:>2} {name}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

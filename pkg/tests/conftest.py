import pytest

from wgpbandit.kernels import DomainGrid, KernelSpec


@pytest.fixture(scope="session")
def bench_domain():
    """The 100-point uniform grid on [0, 1] the benchmark experiments use."""
    return DomainGrid.uniform(100)


@pytest.fixture(scope="session")
def bench_spec():
    return KernelSpec.squared_exponential(0.2)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_criterion_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

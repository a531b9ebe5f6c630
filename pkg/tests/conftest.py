import numpy as np
import pytest

from randfactor.stats import DataPanel, standardize


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def centered_vector(rng, d, sigma=1.0):
    x = rng.standard_normal(d)
    x -= x.mean()
    return sigma * x / x.std(ddof=1)


def std_panel(rng, d, N):
    return standardize(DataPanel(rng.standard_normal((d, N))))


def pytest_terminal_summary(terminalreporter):
    import _report

    if _report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_report.LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)

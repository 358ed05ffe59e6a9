import numpy as np
import pytest

from formseek import FormationSpec, Gains, SimConfig, run
from formseek.config import default_initial
from formseek.field import GAUSSIAN_FIELD, MULTIMODAL_FIELD


@pytest.fixture(scope="session")
def square_spec():
    return FormationSpec.from_size_angle(0.4, 90.0)


@pytest.fixture(scope="session")
def default_gains():
    return Gains(0.7, 0.05, 0.05)


@pytest.fixture(scope="session")
def gaussian_run(square_spec, default_gains):
    """Scenario-1 trajectory from the default start."""
    return run(default_initial(square_spec), GAUSSIAN_FIELD, square_spec, default_gains, SimConfig())


@pytest.fixture(scope="session")
def multimodal_run(default_gains):
    spec = FormationSpec.from_size_angle(0.4, 60.0)
    return run(default_initial(spec, (120.0, 110.0)), MULTIMODAL_FIELD, spec, default_gains, SimConfig(t_max=1500.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(VERDICTS, key=lambda k: int(k[1:])):
        ok, detail = VERDICTS[key]
        terminalreporter.write_line(f"{key:>4} {'PASS' if ok else 'FAIL'}  {detail}")

import importlib

import pytest

from ftkit.bench import default_table_config, run_paper_tables
from ftkit.sim import ConvergenceCriterion, SimConfig

ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_addoption(parser):
    parser.addoption("--estimator", default=None,
                     help="module:function implementing a BoundInput -> seconds estimator to check "
                          "against the published Estimated Time column")


@pytest.fixture(scope="session")
def user_estimator(request):
    target = request.config.getoption("--estimator")
    if not target:
        return None
    mod, _, fn = target.partition(":")
    return getattr(importlib.import_module(mod), fn)


@pytest.fixture(scope="session")
def table_bundle():
    """Full 17-cell run at the default settings (h=1e-4, rk4, eps=1e-6, dwell=1 s)."""
    return run_paper_tables()


@pytest.fixture(scope="session")
def table_bundle_half_step():
    cfg = default_table_config()
    return run_paper_tables(SimConfig(cfg.step_h / 2, cfg.method, cfg.t_max, cfg.record_stride * 2))


@pytest.fixture(scope="session")
def table_bundle_parallel():
    return run_paper_tables(jobs=4)


@pytest.fixture(scope="session")
def table_bundle_scaled_eps():
    return run_paper_tables(crit=ConvergenceCriterion(dwell=1.0), eps_base=1e-3, tolerance=0.01)


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (len(k), k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])

"""Shared fixtures and the acceptance summary printed at the end of the run."""

import pytest

from levy_pide import MarketParams, MeixnerParams, NIGParams, GHParams
from levy_pide.grid import build_grid
from levy_pide.splitting import TABLE_WIDTH

# h values of the tabulated ladders, h * (N - 1) = TABLE_WIDTH
H_1601 = 0.0086347
H_801 = 0.0172694
H_401 = 0.0345388


@pytest.fixture(scope="session")
def market():
    return MarketParams(spot=100.0, strike=100.0, rate=0.05, dividend=0.0, sigma=0.15,
                        maturity=0.01, dt=0.01)


@pytest.fixture(scope="session")
def nig_neg():
    return NIGParams(alpha=10.0, beta=-5.7, delta=0.2)


@pytest.fixture(scope="session")
def nig_pos():
    return NIGParams(alpha=10.0, beta=5.7, delta=0.2)


@pytest.fixture(scope="session")
def gh_low():
    return GHParams(lam=-1.0, alpha=10.0, beta=-5.7, delta=0.2)


@pytest.fixture(scope="session")
def gh_high():
    return GHParams(lam=1.0, alpha=10.0, beta=-5.7, delta=0.2)


@pytest.fixture(scope="session")
def meixner():
    return MeixnerParams(a=0.04, b=-0.32754, d=52.0)


def table_grid(n: int):
    return build_grid(TABLE_WIDTH / (n - 1), TABLE_WIDTH)


# ---------------------------------------------------------------------------
# acceptance summary: tests marked ``criterion(id, text)`` get one line each

_CRITERIA = {}


def pytest_runtest_logreport(report):
    # a fixture error during setup counts as a failure of the criterion
    if report.when != "call" and report.outcome == "passed":
        return
    marks = getattr(report, "criterion", None)
    if marks is not None:
        notes = [str(v) for k, v in report.user_properties if k == "measured"]
        _CRITERIA[report.nodeid] = (marks, report.outcome, "; ".join(notes))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (cid, text), outcome, note in sorted(_CRITERIA.values(), key=lambda v: v[0][0]):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[outcome]
        line = f"[{status}] {cid}: {text}"
        terminalreporter.write_line(line + (f" | measured: {note}" if note else ""))

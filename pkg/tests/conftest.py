import os

import pytest

from pipemc import pipeline
from pipemc.config import RunConfig
from pipemc.geometry import PipeSpec, build_mesh


FLOW_CACHE = os.path.join(os.path.dirname(__file__), ".flow_cache")


@pytest.fixture(scope="session")
def default_mesh():
    return build_mesh(PipeSpec(), 0.015)


@pytest.fixture(scope="session")
def flows():
    """Memoized solver for the L-pipe flow states used by several tests.

    Solved states are kept in tests/.flow_cache (or $PIPEMC_TEST_CACHE) so
    later sessions reuse them; the solver is deterministic, so reuse is exact.
    Delete the directory after changing the flow solver.  Set
    PIPEMC_TEST_CACHE=off to solve from scratch.
    """
    cfg = RunConfig()
    cache = os.environ.get("PIPEMC_TEST_CACHE", FLOW_CACHE)
    cache = None if cache == "off" else cache

    def get(V1, V2):
        return pipeline.flow_pair(cfg, V1, V2, cache)

    return get


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="also run the multi-minute 3-D solver tests marked slow")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="slow 3-D run; use --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# acceptance outcome per criterion number: list of (passed, detail)
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.skipped:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = dict(item.user_properties).get("detail", "")
        if rep.failed and not detail:
            detail = f"{item.name} raised {call.excinfo.typename}" if call.excinfo else item.name
        _CRITERIA.setdefault(mark.args[0], []).append((rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        ok = all(passed for passed, _ in results)
        detail = "; ".join(d for _, d in results if d)
        terminalreporter.write_line(f"CRITERION {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

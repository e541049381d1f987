import os

import pytest


@pytest.fixture(autouse=True, scope="session")
def _kernel_cache(tmp_path_factory):
    # keep kernel tables out of the user's cache directory
    path = tmp_path_factory.mktemp("kernel-cache")
    old = os.environ.get("LOGLAP_CACHE_DIR")
    os.environ["LOGLAP_CACHE_DIR"] = str(path)
    yield path
    if old is None:
        os.environ.pop("LOGLAP_CACHE_DIR", None)
    else:
        os.environ["LOGLAP_CACHE_DIR"] = old


def pytest_terminal_summary(terminalreporter):
    try:
        from acceptance_log import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])

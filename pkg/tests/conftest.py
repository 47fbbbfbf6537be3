import pytest

_RESULTS_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = {}


class CriterionLog:
    def __init__(self, store):
        self._store = store

    def record(self, number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        self._store[number] = line
        print(line)
        return ok


@pytest.fixture
def criterion(request):
    return CriterionLog(request.config.stash[_RESULTS_KEY])


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash[_RESULTS_KEY]
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])

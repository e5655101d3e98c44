import pytest

from nilsubst.specio import load_bundled
from nilsubst.substitution import fixpoint


@pytest.fixture(scope="session")
def heis_spec():
    return load_bundled("heisenberg")


@pytest.fixture(scope="session")
def heis_datum(heis_spec):
    return heis_spec.datum()


@pytest.fixture(scope="session")
def heis_subst(heis_spec, heis_datum):
    return heis_spec.substitution(heis_datum)


@pytest.fixture(scope="session")
def heis_fixpoint(heis_subst):
    return fixpoint(heis_subst)


@pytest.fixture(scope="session")
def eucl_spec():
    return load_bundled("euclidean-z3")


@pytest.fixture(scope="session")
def eucl_datum(eucl_spec):
    return eucl_spec.datum()


@pytest.fixture(scope="session")
def eucl_subst(eucl_spec, eucl_datum):
    return eucl_spec.substitution(eucl_datum)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test still asserts on its own."""
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[_ACCEPTANCE].append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)

import socket
from pathlib import Path

import pytest

from fcsynth.grammar import Router, load_pools_dir
from fcsynth.registry import load_registry

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

ACCEPTANCE_LINES = pytest.StashKey[list]()
BLOCKED_CONNECTIONS = []


class NetworkBlocked(OSError):
    pass


def _refuse(self, address, *args, **kwargs):
    BLOCKED_CONNECTIONS.append(address)
    raise NetworkBlocked(f"test suite is offline; refused connection to {address!r}")


def _refuse_create(address, *args, **kwargs):
    BLOCKED_CONNECTIONS.append(address)
    raise NetworkBlocked(f"test suite is offline; refused connection to {address!r}")


@pytest.fixture(scope="session", autouse=True)
def no_network():
    """Every test runs with outbound sockets disabled."""
    mp = pytest.MonkeyPatch()
    mp.setattr(socket.socket, "connect", _refuse)
    mp.setattr(socket.socket, "connect_ex", _refuse)
    mp.setattr(socket, "create_connection", _refuse_create)
    yield BLOCKED_CONNECTIONS
    mp.undo()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


class Criterion:
    def __init__(self, config, number, title):
        self.config, self.number, self.title = config, number, title
        self.done = False

    def report(self, ok, detail=""):
        line = f"[{self.number}] {'PASS' if ok else 'FAIL'}  {self.title}" + (f" -- {detail}" if detail else "")
        self.config.stash[ACCEPTANCE_LINES].append(line)
        print(line)
        self.done = True
        assert ok, line


@pytest.fixture
def criterion(request):
    """``criterion(n, title)`` returns a reporter; one PASS/FAIL line per criterion."""
    made = []

    def make(number, title):
        c = Criterion(request.config, number, title)
        made.append(c)
        return c

    yield make
    for c in made:
        if not c.done:
            c.config.stash[ACCEPTANCE_LINES].append(f"[{c.number}] FAIL  {c.title} -- raised before reporting")


@pytest.fixture(scope="session")
def reg():
    return load_registry()


@pytest.fixture(scope="session")
def pools(reg):
    return load_pools_dir(registry=reg)


@pytest.fixture(scope="session")
def router(reg, pools):
    return Router(pools, reg)


@pytest.fixture(scope="session")
def photo(reg):
    return reg.get("take_a_photo")

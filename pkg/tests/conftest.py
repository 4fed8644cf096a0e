import pytest

from resilience_smc import QueueModel, QueueParams, TimeGrid, ToyChain


class CountingSimulator:
    """Wraps a simulator, hides any fast path and counts ``step`` calls."""

    def __init__(self, inner):
        self.inner = inner
        self.grid = inner.grid
        self.calls = 0

    def initial_state(self, stream=None):
        return self.inner.initial_state(stream)

    def step(self, state, stream):
        self.calls += 1
        return self.inner.step(state, stream)

    def reaction(self, state):
        return self.inner.reaction(state)

    def default_levels(self):
        return self.inner.default_levels()

    def with_policy(self, state, index):
        return self.inner.with_policy(state, index)


@pytest.fixture
def counting():
    return CountingSimulator


@pytest.fixture
def baseline():
    return QueueModel(QueueParams())


@pytest.fixture
def short_queue():
    """Queue on a 6 s horizon with a 0.5 s grace period; cheap to simulate."""
    return QueueModel(QueueParams(Lambda=0.74, sigma_F=0.7, t_tar=0.5,
                                  grid=TimeGrid(0.05, 6.0)))


@pytest.fixture
def toy():
    return ToyChain(0.2, 3)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

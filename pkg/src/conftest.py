import pytest

from graph_core import Graph


@pytest.fixture
def k4() -> Graph:
    return Graph.complete(4)


@pytest.fixture
def path3() -> Graph:
    return Graph.path(3)


@pytest.fixture
def c5() -> Graph:
    return Graph.cycle(5)


@pytest.fixture
def empty5() -> Graph:
    return Graph.empty(5)


@pytest.fixture
def bipartite() -> Graph:
    # K_{3,3}
    return Graph.from_edges(6, [(a, b) for a in (1, 2, 3) for b in (4, 5, 6)])

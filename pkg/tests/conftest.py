import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from morseph.graph import Graph  # noqa: E402

# Nine-vertex example graph: triangles {0,1,7} and {2,3,4}, the unfilled
# 4-cycle 1-2-5-7, and pendants 6 and 8 on the degree-5 hub 7.
FIG1_EDGES = [
    (0, 1), (0, 7), (1, 2), (1, 7), (2, 3), (2, 4),
    (2, 5), (3, 4), (5, 7), (6, 7), (7, 8),
]


def random_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


@pytest.fixture
def fig1() -> Graph:
    return Graph.from_edges(9, FIG1_EDGES)


class StubRng:
    """Stands in for a generator: every noise draw returns the same value."""

    def __init__(self, value: float = 0.05):
        self.value = value

    def uniform(self, lo=0.0, hi=1.0, size=None):
        return self.value

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from roadrobust.network import RoadNetwork  # noqa: E402


def make_net(nodes, edges, name="t"):
    """nodes: {id: (x, y)}; edges: [(s, t, length), ...]."""
    ids = list(nodes)
    xs = [nodes[i][0] for i in ids]
    ys = [nodes[i][1] for i in ids]
    if edges:
        s, t, w = zip(*edges)
    else:
        s = t = w = ()
    return RoadNetwork(ids, xs, ys, list(s), list(t), list(w), None, name=name)


@pytest.fixture
def path3():
    return make_net({0: (0, 0), 1: (1, 0), 2: (2, 0)}, [(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import math

import numpy as np
import pytest

from polyvol.graphs import (
    cube_graph,
    octahedron_graph,
    prism_graph,
    pyramid_graph,
    tetrahedron_graph,
)
from polyvol.shapes import regular_tetrahedron


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def corpus_graphs():
    return {
        "K4": tetrahedron_graph(),
        "cube": cube_graph(),
        "octahedron": octahedron_graph(),
        "pyr3": pyramid_graph(3),
        "pyr4": pyramid_graph(4),
        "pyr5": pyramid_graph(5),
        "pyr6": pyramid_graph(6),
        "pyr7": pyramid_graph(7),
        "pyr8": pyramid_graph(8),
        "prism3": prism_graph(3),
    }


@pytest.fixture
def compact_tetra():
    return regular_tetrahedron(0.55)


@pytest.fixture
def hyperideal_tetra():
    # Radius must stay below sqrt(3) so edges still cross the ball.
    return regular_tetrahedron(1.3)


def to_networkx(g):
    import networkx as nx

    G = nx.Graph()
    G.add_nodes_from(range(g.n_vertices))
    G.add_edges_from(g.edges)
    return G

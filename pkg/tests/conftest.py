"""Shared fixtures: two worked example systems and the mixed graphs expected from them."""

import itertools

import numpy as np
import pytest

from graph_core import DirectedSystem, EndpointMark, MixedGraph, VertexClass

O, L, S = VertexClass.OBSERVED, VertexClass.LATENT, VertexClass.SELECTION

FIVE_NAMES = ("O1", "O2", "O3", "O4", "O5")

# O1..O5 are vertices 0..4, L1 is vertex 5
CONFOUNDED_CYCLE_EDGES = {(5, 0), (5, 1), (2, 1), (3, 2), (1, 3), (4, 3)}


def build_mixed(p_obs, edges, names=None) -> MixedGraph:
    """Mixed graph from (i, mark at i, mark at j, j) tuples using symbols - > o."""
    m = MixedGraph(p_obs, names)
    for i, mi, mj, j in edges:
        m.add_edge(i, j, EndpointMark.from_symbol(mi), EndpointMark.from_symbol(mj))
    return m


def random_system(rng, p, edge_prob=0.35, max_latent=2, max_select=1, min_observed=2) -> DirectedSystem:
    """Small random directed system (cycles allowed) with random latent/selection labels."""
    mask = rng.random((p, p)) < edge_prob
    np.fill_diagonal(mask, False)
    edges = {(int(i), int(j)) for i, j in zip(*np.nonzero(mask))}
    order = [int(v) for v in rng.permutation(p)]
    n_lat = int(rng.integers(0, max_latent + 1))
    n_sel = int(rng.integers(0, max_select + 1))
    n_lat = min(n_lat, p - min_observed)
    n_sel = min(n_sel, p - min_observed - n_lat)
    labels = [O] * p
    for v in order[:n_lat]:
        labels[v] = L
    for v in order[n_lat:n_lat + n_sel]:
        labels[v] = S
    return DirectedSystem(p, frozenset(edges), tuple(labels))


def all_subsets(items):
    items = sorted(items)
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


@pytest.fixture
def two_cycle_system() -> DirectedSystem:
    # O1 -> O2, O4 -> O3 and a two-cycle O2 <-> O3
    coeffs = np.zeros((4, 4))
    coeffs[1, 0] = 0.5
    coeffs[2, 1] = 0.4
    coeffs[1, 2] = 0.3
    coeffs[2, 3] = 0.6
    return DirectedSystem.from_coeffs(coeffs, names=("O1", "O2", "O3", "O4"))


@pytest.fixture
def two_cycle_maag() -> MixedGraph:
    return build_mixed(4, [(0, "-", ">", 1), (0, "-", ">", 2), (3, "-", ">", 1), (3, "-", ">", 2), (1, "-", "-", 2)])


@pytest.fixture
def confounded_cycle_system() -> DirectedSystem:
    return DirectedSystem(6, frozenset(CONFOUNDED_CYCLE_EDGES), (O, O, O, O, O, L), names=FIVE_NAMES + ("L1",))


@pytest.fixture
def confounded_cycle_maag() -> MixedGraph:
    return build_mixed(5, [
        (0, ">", ">", 1), (0, ">", ">", 2), (4, "-", ">", 1), (4, "-", ">", 3),
        (1, "-", "-", 2), (2, "-", "-", 3), (1, "-", "-", 3),
    ], FIVE_NAMES)


@pytest.fixture
def cci_skeleton() -> MixedGraph:
    return build_mixed(5, [
        (0, "o", "o", 1), (0, "o", "o", 2), (4, "o", "o", 1), (4, "o", "o", 3),
        (1, "o", "o", 2), (2, "o", "o", 3), (1, "o", "o", 3),
    ], FIVE_NAMES)


@pytest.fixture
def cci_v_structures() -> MixedGraph:
    return build_mixed(5, [
        (0, "o", ">", 1), (0, "o", "o", 2), (4, "o", ">", 1), (4, "o", "o", 3),
        (1, "o", "o", 2), (2, "o", "o", 3), (1, "o", "o", 3),
    ], FIVE_NAMES)


@pytest.fixture
def cci_final() -> MixedGraph:
    return build_mixed(5, [
        (0, "o", ">", 1), (0, "o", ">", 2), (4, "o", ">", 1), (4, "o", ">", 3),
        (1, "-", "-", 2), (2, "-", "-", 3), (1, "-", "-", 3),
    ], FIVE_NAMES)


@pytest.fixture
def ccd_output() -> MixedGraph:
    """What CCD outputs on the confounded cycle system; one tail is wrong."""
    return build_mixed(5, [
        (0, "-", ">", 1), (0, "o", "o", 2), (4, "-", ">", 1), (4, "o", "o", 3),
        (1, "o", "o", 2), (2, "o", "o", 3), (1, "o", "o", 3),
    ], FIVE_NAMES)

import numpy as np
import pytest

from admmtrack import graph


def test_slot_ordering_lexicographic():
    t = graph.Topology(3, [(0, 1), (1, 2), (0, 2)])
    assert t.slots == ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))
    assert t.slot_index[(1, 2)] == 3


def test_slot_rev_is_involution():
    t = graph.erdos_renyi(8, 0.5, 3)
    assert np.array_equal(t.slot_rev[t.slot_rev], np.arange(t.n_slots))
    for s in range(t.n_slots):
        assert t.slot_owner[t.slot_rev[s]] == t.slot_peer[s]


def test_slot_starts_csr():
    t = graph.star(5)
    for i in range(5):
        lo, hi = t.slot_starts[i], t.slot_starts[i + 1]
        assert hi - lo == t.degrees[i]
        assert all(t.slot_owner[k] == i for k in range(lo, hi))


def test_degrees_and_total():
    t = graph.ring(6)
    assert np.array_equal(t.degrees, np.full(6, 2))
    assert t.total_degree == 12 == t.n_slots


def test_connectivity_enforced():
    with pytest.raises(graph.GraphConstructionError):
        graph.Topology(4, [(0, 1), (2, 3)])


def test_self_loop_rejected():
    with pytest.raises(graph.GraphConstructionError):
        graph.Topology(3, [(0, 0), (0, 1), (1, 2)])


def test_out_of_range_edge_rejected():
    with pytest.raises(graph.GraphConstructionError):
        graph.Topology(3, [(0, 5)])


def test_duplicate_and_reversed_edges_collapse():
    t = graph.Topology(3, [(0, 1), (1, 0), (1, 2), (2, 1)])
    assert len(t.edges) == 2


def test_erdos_renyi_deterministic():
    a = graph.erdos_renyi(10, 0.3, 42)
    b = graph.erdos_renyi(10, 0.3, 42)
    assert a.edges == b.edges
    assert graph.is_connected(a)


def test_erdos_renyi_redraws_until_connected():
    # p low enough that the first draws are usually disconnected
    t = graph.erdos_renyi(10, 0.1, 0)
    assert graph.is_connected(t)


def test_erdos_renyi_bad_p():
    with pytest.raises(graph.GraphConstructionError):
        graph.erdos_renyi(5, 0.0, 1)


def test_metropolis_weights_doubly_stochastic():
    t = graph.erdos_renyi(9, 0.4, 11)
    w = graph.metropolis_weights(t)
    assert np.allclose(w, w.T)
    assert np.allclose(w.sum(axis=1), 1.0)
    assert (w >= 0).all()
    off = w * (1 - np.eye(9))
    for i, j in t.edges:
        assert w[i, j] == 1.0 / (1.0 + max(t.degrees[i], t.degrees[j]))
    assert np.count_nonzero(off) == t.n_slots


def test_json_round_trip():
    t = graph.erdos_renyi(7, 0.5, 5)
    t2 = graph.Topology.from_json(t.to_json())
    assert t2.edges == t.edges and t2.n_agents == t.n_agents


def test_named_topologies():
    assert len(graph.complete(5).edges) == 10
    assert len(graph.star(5).edges) == 4
    assert len(graph.path(5).edges) == 4
    assert len(graph.ring(5).edges) == 5

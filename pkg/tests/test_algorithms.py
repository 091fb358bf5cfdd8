import numpy as np
import pytest

from admmtrack import algorithms, consensus, graph, problems
from admmtrack.algorithms import HyperParams


def _setup(seed=0, N=6, n=2):
    p = problems.random_quadratic(N, n, 1, 5, -10, 20, seed)
    t = graph.erdos_renyi(N, 0.5, seed)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-5, 5, (N, n))
    z0 = rng.uniform(-5, 5, (t.n_slots, 2 * n))
    return p, t, x0, z0


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        HyperParams(gamma=0.0, delta=1.0)
    with pytest.raises(ValueError):
        HyperParams(gamma=0.5, delta=0.0)
    with pytest.raises(ValueError):
        HyperParams(gamma=0.5, delta=1.0, alpha=1.0)
    with pytest.raises(ValueError):
        HyperParams(gamma=0.5, delta=1.0, rho=-1.0)


def test_delta_bound_warns_not_errors():
    p, t, x0, z0 = _setup()
    h = HyperParams(gamma=0.5, delta=10.0)
    with pytest.warns(UserWarning):
        h.warn_if_aggressive(p)


def test_atg_step_matches_consensus_round():
    # one step decomposes into the consensus round plus the descent update
    p, t, x0, z0 = _setup(3)
    h = HyperParams(0.3, 0.4, 0.6, 0.7)
    s = algorithms.NetworkState(x0.copy(), z0.copy())
    out = algorithms.atg_step(s, p, t, h)
    u = np.concatenate([x0, p.local_gradients(x0)], axis=1)
    ys, z_ref = consensus.admm_consensus_round(t, u, z0, h.rho, h.alpha)
    n = p.n
    x_ref = x0 + h.gamma * (ys[:, :n] - x0) - h.gamma * h.delta * ys[:, n:]
    assert np.allclose(out.x, x_ref, atol=1e-13)
    assert np.allclose(out.z, z_ref, atol=1e-13)


def test_ratg_all_ones_equals_atg_bitwise():
    p, t, x0, z0 = _setup(5)
    h = HyperParams(0.3, 0.4, 0.6, 0.7)
    a = algorithms.NetworkState(x0.copy(), z0.copy())
    b = algorithms.NetworkState(x0.copy(), z0.copy())
    ones_n = np.ones(t.n_agents, dtype=np.uint8)
    ones_s = np.ones(t.n_slots, dtype=np.uint8)
    for _ in range(50):
        a = algorithms.atg_step(a, p, t, h)
        b = algorithms.ratg_step(b, p, t, h, ones_n, ones_s)
    assert a.x.tobytes() == b.x.tobytes()
    assert a.z.tobytes() == b.z.tobytes()


def test_ratg_inactive_agents_frozen():
    p, t, x0, z0 = _setup(7)
    h = HyperParams(0.3, 0.4, 0.6, 0.7)
    act = np.array([1, 0, 1, 0, 1, 0], dtype=np.uint8)
    dlv = np.ones(t.n_slots, dtype=np.uint8)
    s = algorithms.NetworkState(x0.copy(), z0.copy())
    out = algorithms.ratg_step(s, p, t, h, act, dlv)
    for i in range(t.n_agents):
        lo, hi = t.slot_starts[i], t.slot_starts[i + 1]
        if act[i]:
            assert not np.array_equal(out.x[i], x0[i])
        else:
            assert np.array_equal(out.x[i], x0[i])
            assert np.array_equal(out.z[lo:hi], z0[lo:hi])


def test_ratg_z_needs_sender_active():
    # edge variable holds when the peer was silent, even if delivery flag is up
    p, t, x0, z0 = _setup(11)
    h = HyperParams(0.3, 0.4, 0.6, 0.7)
    act = np.ones(t.n_agents, dtype=np.uint8)
    act[0] = 0
    dlv = np.ones(t.n_slots, dtype=np.uint8)
    s = algorithms.NetworkState(x0.copy(), z0.copy())
    out = algorithms.ratg_step(s, p, t, h, act, dlv)
    for k in range(t.n_slots):
        if t.slot_peer[k] == 0:
            assert np.array_equal(out.z[k], z0[k])


def test_ratg_lost_message_freezes_edge():
    p, t, x0, z0 = _setup(13)
    h = HyperParams(0.3, 0.4, 0.6, 0.7)
    act = np.ones(t.n_agents, dtype=np.uint8)
    dlv = np.ones(t.n_slots, dtype=np.uint8)
    dlv[0] = 0
    s = algorithms.NetworkState(x0.copy(), z0.copy())
    out = algorithms.ratg_step(s, p, t, h, act, dlv)
    assert np.array_equal(out.z[0], z0[0])
    assert not np.array_equal(out.z[1], z0[1])


def test_gt_tracking_identity():
    # sum of trackers equals sum of current local gradients, every iteration
    p, t, x0, _ = _setup(17)
    W = graph.metropolis_weights(t)
    h = HyperParams(0.05, 0.5)
    s = algorithms.init_gt_state(p, x0)
    for _ in range(200):
        s = algorithms.gt_step(s, p, W, h)
        lhs = s.s.sum(axis=0)
        rhs = p.local_gradients(s.x).sum(axis=0)
        assert np.abs(lhs - rhs).max() < 1e-10


def test_gt_converges_on_quadratic():
    p, t, x0, _ = _setup(19)
    W = graph.metropolis_weights(t)
    h = HyperParams(0.4, 0.1)
    s = algorithms.init_gt_state(p, x0)
    x_star = problems.centralized_solve(p)
    for _ in range(3000):
        s = algorithms.gt_step(s, p, W, h)
    assert np.max(np.linalg.norm(s.x - x_star, axis=1)) < 1e-8


def test_agent_state_view():
    p, t, x0, z0 = _setup(23)
    s = algorithms.NetworkState(x0, z0)
    xi, zrow = s.agent_state(0, t)
    assert np.array_equal(xi, x0[0])
    assert set(zrow) == set(t.neighbors[0])


def test_init_network_state_validation():
    t = graph.ring(4)
    with pytest.raises(ValueError):
        algorithms.init_network_state(t, 2, x0=np.zeros((3, 2)))

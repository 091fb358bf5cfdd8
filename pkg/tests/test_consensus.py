import numpy as np
import pytest

from admmtrack import consensus, graph, netsim


def test_local_estimate_scalar_contract():
    u = np.array([1.0, 2.0])
    z = [np.array([0.5, 0.5]), np.array([1.5, -0.5])]
    out = consensus.admm_local_estimate(u, z, 0.5, 2)
    assert np.allclose(out, (u + z[0] + z[1]) / 2.0)
    with pytest.raises(ValueError):
        consensus.admm_local_estimate(u, z, 0.5, 3)


def test_message_and_z_update_forms():
    z = np.array([1.0, -1.0])
    ys = np.array([2.0, 0.0])
    q = consensus.admm_message(z, ys, 0.25)
    assert np.allclose(q, -z + 0.5 * ys)
    znew = consensus.admm_z_update(z, q, 0.5)
    assert np.allclose(znew, 0.5 * z + 0.5 * q)


def test_consensus_round_matches_scalar_ops():
    t = graph.ring(4)
    rng = np.random.default_rng(0)
    u = rng.uniform(-1, 1, (4, 3))
    z = rng.uniform(-1, 1, (t.n_slots, 3))
    rho, alpha = 0.3, 0.6
    ys, z_next = consensus.admm_consensus_round(t, u, z, rho, alpha)
    for i in range(4):
        lo, hi = t.slot_starts[i], t.slot_starts[i + 1]
        ref = consensus.admm_local_estimate(u[i], list(z[lo:hi]), rho, int(t.degrees[i]))
        assert np.allclose(ys[i], ref)
    for s in range(t.n_slots):
        j = t.slot_peer[s]
        q = consensus.admm_message(z[t.slot_rev[s]], ys[j], rho)
        assert np.allclose(z_next[s], consensus.admm_z_update(z[s], q, alpha))


def test_fixed_point_tracks_exact_average():
    # oracle identity behind the tracking algorithms
    for seed in range(3):
        t = graph.erdos_renyi(6, 0.5, seed)
        u = np.random.default_rng(seed).uniform(-5, 5, (6, 2))
        ys, z = consensus.admm_consensus_fixed_point(t, u, 0.4, 0.5)
        assert np.abs(ys - u.mean(axis=0)).max() < 1e-10
        ys2, z2 = consensus.admm_consensus_round(t, u, z, 0.4, 0.5)
        assert np.abs(z2 - z).max() < 1e-11


def test_generic_relaxed_admm_consensus():
    # quadratic local costs ||x - u_i||^2/2: iterates reach the average
    t = graph.ring(5)
    u = np.random.default_rng(2).uniform(-3, 3, (5, 2))
    x = np.zeros_like(u)
    z = np.zeros((t.n_slots, 2))
    for _ in range(2000):
        x, z = consensus.r_admm_generic_step(x, z, u, t, 0.5, 0.5)
    assert np.abs(x - u.mean(axis=0)).max() < 1e-10


def test_average_consensus_step():
    t = graph.complete(4)
    W = graph.metropolis_weights(t)
    vals = np.random.default_rng(1).uniform(-1, 1, (4, 2))
    inc = np.random.default_rng(2).uniform(-1, 1, (4, 2))
    out = consensus.average_consensus_step(vals, inc, W)
    assert np.allclose(out, W @ vals + inc)
    # sum is preserved up to increments
    assert np.allclose(out.sum(axis=0), vals.sum(axis=0) + inc.sum(axis=0))


def test_push_sum_mass_conservation_lossless():
    t = graph.erdos_renyi(7, 0.5, 4)
    sig = np.random.default_rng(3).uniform(-5, 5, (7, 2))
    st = consensus.PushSumState(t, sig)
    act = np.ones(7, dtype=bool)
    dlv = np.ones(t.n_slots, dtype=bool)
    for _ in range(300):
        st = consensus.push_sum_step(st, sig, act, dlv)
        assert np.abs(st.total_mass() - sig.sum(axis=0)).max() < 1e-10
    assert np.abs(st.estimates() - sig.mean(axis=0)).max() < 1e-10


def test_push_sum_recovers_after_losses():
    t = graph.erdos_renyi(6, 0.5, 9)
    sig = np.random.default_rng(5).uniform(-5, 5, (6, 2))
    st = consensus.PushSumState(t, sig)
    sched = netsim.random_bernoulli_schedule(t, 3000, 13)
    for k in range(3000):
        lam, beta = sched.slice(k)
        st = consensus.push_sum_step(st, sig, lam.astype(bool), beta.astype(bool))
    assert np.abs(st.estimates() - sig.mean(axis=0)).max() < 1e-8


def test_push_sum_inactive_agents_hold_mass():
    t = graph.ring(4)
    sig = np.ones((4, 1))
    st = consensus.PushSumState(t, sig)
    act = np.zeros(4, dtype=bool)
    st2 = consensus.push_sum_step(st, sig, act, np.ones(t.n_slots, dtype=bool))
    assert np.array_equal(st2.num, st.num)
    assert np.array_equal(st2.den, st.den)


def test_memory_slot_counts():
    t = graph.star(5)
    st = consensus.PushSumState(t, np.zeros((5, 1)))
    for i in range(5):
        assert st.memory_slots(i) == 4 + 2 * t.degrees[i]
    assert np.array_equal(
        consensus.protocol_memory_counts("average", t), np.ones(5, dtype=np.int64)
    )
    assert np.array_equal(
        consensus.protocol_memory_counts("push-sum", t), 4 + 2 * t.degrees
    )
    assert np.array_equal(consensus.protocol_memory_counts("admm", t), t.degrees)
    with pytest.raises(ValueError):
        consensus.protocol_memory_counts("gossip", t)

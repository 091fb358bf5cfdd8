"""Dynamic consensus primitives.

The ADMM-based protocol (the core of both tracking algorithms), the
generic relaxed distributed ADMM step for quadratic local costs, plain
average consensus, and a loss-robust ratio (push-sum) consensus.  All
operations are pure state-transition functions; sequencing belongs to the
simulation loop.
"""

from __future__ import annotations

import numpy as np

from .graph import Topology


# ---------------------------------------------------------------------------
# ADMM dynamic consensus (edge variables z_ij, dimension 2n per slot)

def admm_local_estimate(u_i, z_row, rho: float, d_i: int):
    """Closed-form local minimizer: (u_i + sum_j z_ij) / (1 + rho * d_i)."""
    if rho <= 0:
        raise ValueError("rho must be > 0")
    z_row = list(z_row)
    if len(z_row) != d_i:
        raise ValueError(f"expected {d_i} edge variables, got {len(z_row)}")
    acc = np.asarray(u_i, dtype=float).copy()
    for z in z_row:
        acc += z
    return acc / (1.0 + rho * d_i)


def admm_message(z_ij, ys_i, rho: float):
    """Message payload sent to the peer of slot (i, j)."""
    if rho <= 0:
        raise ValueError("rho must be > 0")
    return -np.asarray(z_ij, dtype=float) + 2.0 * rho * np.asarray(ys_i, dtype=float)


def admm_z_update(z_ij, q_ji, alpha: float):
    """Relaxed edge-variable update: (1 - alpha) z_ij + alpha q_ji."""
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    return (1.0 - alpha) * np.asarray(z_ij, dtype=float) + alpha * np.asarray(
        q_ji, dtype=float
    )


def admm_consensus_round(t: Topology, u: np.ndarray, z: np.ndarray, rho, alpha):
    """One synchronous lossless round of the ADMM consensus on signals `u`.

    u has shape (N, k), z has shape (n_slots, k).  Returns (ys, z_next).
    """
    denom = (1.0 + rho * t.degrees)[:, None]
    zsum = np.zeros_like(u)
    np.add.at(zsum, t.slot_owner, z)
    ys = (u + zsum) / denom
    q = -z[t.slot_rev] + 2.0 * rho * ys[t.slot_peer]  # message from the peer
    z_next = (1.0 - alpha) * z + alpha * q
    return ys, z_next


def admm_consensus_fixed_point(
    t: Topology,
    u: np.ndarray,
    rho: float,
    alpha: float,
    tol: float = 1e-13,
    max_iter: int = 200_000,
):
    """Iterate the consensus rounds on frozen signals until the edge
    variables stop moving; returns (ys, z) at the fixed point."""
    z = np.zeros((t.n_slots, u.shape[1]))
    for _ in range(max_iter):
        ys, z_next = admm_consensus_round(t, u, z, rho, alpha)
        if np.max(np.abs(z_next - z)) <= tol:
            return ys, z_next
        z = z_next
    raise RuntimeError("consensus fixed-point iteration did not converge")


def r_admm_generic_step(x, z, u, t: Topology, rho: float, alpha: float):
    """Synchronous relaxed distributed ADMM round for the quadratic local
    costs l_i(x) = ||x - u_i||^2 / 2 (closed-form argmin only).

    Returns (x_next, z_next) where x_next[i] = (u_i + sum_j z_ij)/(1+rho d_i)
    and z_ij is relaxed toward -z_ji + 2 rho x_j^{new}.
    """
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    denom = (1.0 + rho * t.degrees)[:, None]
    zsum = np.zeros_like(u)
    if t.n_slots:
        np.add.at(zsum, t.slot_owner, z)
    x_next = (u + zsum) / denom
    if t.n_slots:
        z_next = (1.0 - alpha) * z - alpha * z[t.slot_rev] + 2.0 * alpha * rho * x_next[
            t.slot_peer
        ]
    else:
        z_next = z.copy()
    return x_next, z_next


# ---------------------------------------------------------------------------
# Baseline: dynamic average consensus on a doubly stochastic weight matrix

def average_consensus_step(values, increments, W):
    """out_i = sum_j w_ij values_j + increments_i."""
    return np.asarray(W, dtype=float) @ np.asarray(values, dtype=float) + np.asarray(
        increments, dtype=float
    )


# ---------------------------------------------------------------------------
# Robust ratio (push-sum) consensus with cumulative broadcast counters.
#
# Senders broadcast running totals of the mass shipped on each link;
# receivers difference against the last total they saw, so mass lost to
# erasures is recovered at the next successful delivery.

class PushSumState:
    """Per-agent mass pair plus cumulative counters.

    Protocol memory per agent: numerator mass, denominator mass, and the
    two cumulative broadcast totals (4 slots), plus one received-total
    record per incoming link and mass kind (2 d_i slots).  The `tracked`
    array records the last reference signal folded into the numerator; it
    mirrors the step input rather than being protocol state proper.
    """

    def __init__(self, t: Topology, signals: np.ndarray):
        signals = np.asarray(signals, dtype=float)
        self.topology = t
        self.num = signals.copy()
        self.den = np.ones(t.n_agents)
        self.sigma_num = np.zeros_like(signals)
        self.sigma_den = np.zeros(t.n_agents)
        self.recv_num = np.zeros((t.n_slots, signals.shape[1]))
        self.recv_den = np.zeros(t.n_slots)
        self.tracked = signals.copy()

    def estimates(self) -> np.ndarray:
        return self.num / self.den[:, None]

    def total_mass(self) -> np.ndarray:
        """Conserved numerator mass: held plus in flight on every link."""
        in_flight = self.sigma_num[self.topology.slot_peer] - self.recv_num
        return self.num.sum(axis=0) + in_flight.sum(axis=0)

    def memory_slots(self, i: int) -> int:
        return 4 + 2 * int(self.topology.degrees[i])

    def copy(self) -> "PushSumState":
        out = PushSumState.__new__(PushSumState)
        out.topology = self.topology
        for name in ("num", "den", "sigma_num", "sigma_den", "recv_num",
                     "recv_den", "tracked"):
            setattr(out, name, getattr(self, name).copy())
        return out


def push_sum_step(
    state: PushSumState,
    signals: np.ndarray,
    active: np.ndarray,
    delivered: np.ndarray,
) -> PushSumState:
    """One robust ratio-consensus round tracking the average of `signals`.

    `active` is the per-agent activation flag; `delivered[s]` says whether
    the message on directed slot s = (receiver, sender-peer) arrived this
    round (it requires the sender to be active, since only active agents
    broadcast).  Reception is passive: arriving counters are integrated
    whether or not the receiver is active this round.
    """
    t = state.topology
    s = state.copy()
    act = np.asarray(active, dtype=bool)
    dlv = np.asarray(delivered, dtype=bool) & act[t.slot_peer]

    # fold signal increments, then broadcast shares and bump counters
    s.num[act] += signals[act] - s.tracked[act]
    s.tracked[act] = signals[act]
    share = 1.0 / (t.degrees + 1.0)
    s.sigma_num[act] += s.num[act] * share[act, None]
    s.sigma_den[act] += s.den[act] * share[act]
    s.num[act] *= share[act, None]
    s.den[act] *= share[act]

    # successful deliveries: difference against last received totals
    peers = t.slot_peer[dlv]
    owners = t.slot_owner[dlv]
    dn = s.sigma_num[peers] - s.recv_num[dlv]
    dd = s.sigma_den[peers] - s.recv_den[dlv]
    np.add.at(s.num, owners, dn)
    np.add.at(s.den, owners, dd)
    s.recv_num[dlv] = s.sigma_num[peers]
    s.recv_den[dlv] = s.sigma_den[peers]
    return s


def protocol_memory_counts(protocol: str, t: Topology) -> np.ndarray:
    """Per-agent persisted-variable slot counts of each consensus protocol."""
    if protocol == "average":
        return np.ones(t.n_agents, dtype=np.int64)
    if protocol == "push-sum":
        return 4 + 2 * t.degrees
    if protocol == "admm":
        return t.degrees.copy()
    raise ValueError(f"unknown protocol {protocol!r}")

"""Agent-level optimization algorithms built on the consensus primitives.

ATG: synchronous ADMM-tracking gradient method.
RATG: its robust variant for asynchronous agents and packet losses
(ATG is the all-active, lossless special case).
GT: the gradient-tracking baseline on a doubly stochastic weight matrix.
PS: the push-sum-based robust tracker used for comparison.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import consensus
from ._backend import tracking_step
from .graph import Topology


@dataclass(frozen=True)
class HyperParams:
    gamma: float
    delta: float
    alpha: float = 0.5
    rho: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be > 0, got {self.rho}")

    def warn_if_aggressive(self, problem) -> None:
        """Warn (not error) when delta exceeds the convergence-theory bound
        2 mu / (N L^2) for instances exposing mu and L."""
        bound = 2.0 * problem.mu / (problem.N * problem.L**2)
        if self.delta >= bound:
            warnings.warn(
                f"delta={self.delta} >= 2*mu/(N*L^2)={bound:.3g}; convergence "
                "is no longer guaranteed by theory",
                stacklevel=2,
            )


@dataclass
class NetworkState:
    """Aggregate state of the ADMM-tracking algorithms.

    x: (N, n) solution estimates; z: (n_slots, 2n) edge variables in the
    topology's slot order; ys: (N, 2n) scratch [y_i; s_i] of the most
    recent active step (outputs, not persisted protocol state).
    """

    x: np.ndarray
    z: np.ndarray
    t: int = 0
    ys: np.ndarray | None = field(default=None, repr=False)

    def copy(self) -> "NetworkState":
        return NetworkState(
            self.x.copy(),
            self.z.copy(),
            self.t,
            None if self.ys is None else self.ys.copy(),
        )

    def agent_state(self, i: int, topo: Topology):
        """Per-agent view: (x_i, {j: z_ij})."""
        lo, hi = topo.slot_starts[i], topo.slot_starts[i + 1]
        return self.x[i], {
            topo.slot_peer[k]: self.z[k] for k in range(lo, hi)
        }


def init_network_state(topo: Topology, n: int, x0=None, z0=None) -> NetworkState:
    x = np.zeros((topo.n_agents, n)) if x0 is None else np.array(x0, dtype=float)
    z = (
        np.zeros((topo.n_slots, 2 * n))
        if z0 is None
        else np.array(z0, dtype=float)
    )
    if x.shape != (topo.n_agents, n) or z.shape != (topo.n_slots, 2 * n):
        raise ValueError("state arrays do not match topology/dimension")
    return NetworkState(x, z)


def ratg_step(
    s: NetworkState,
    problem,
    topo: Topology,
    h: HyperParams,
    active,
    delivered,
) -> NetworkState:
    """One round with activation flags `active` (N,) and per-directed-slot
    delivery flags `delivered` (n_slots,).

    An edge variable z_ij moves only when agent i is active, the message
    from j arrived, and j was active to send it.  Inactive agents keep
    x_i and all z_ij unchanged.
    """
    act = np.asarray(active, dtype=np.uint8)
    dlv = np.asarray(delivered, dtype=np.uint8)
    zflag = act[topo.slot_owner] & dlv & act[topo.slot_peer]
    grad = problem.local_gradients(s.x)
    x_next, z_next, ys = tracking_step(
        s.x,
        grad,
        s.z,
        act,
        zflag,
        topo.degrees,
        topo.slot_owner,
        topo.slot_rev,
        topo.slot_peer,
        h.gamma,
        h.delta,
        h.alpha,
        h.rho,
    )
    return NetworkState(x_next, z_next, s.t + 1, ys)


def atg_step(s: NetworkState, problem, topo: Topology, h: HyperParams) -> NetworkState:
    """Synchronous round: all agents active, all messages delivered."""
    ones_n = np.ones(topo.n_agents, dtype=np.uint8)
    ones_s = np.ones(topo.n_slots, dtype=np.uint8)
    return ratg_step(s, problem, topo, h, ones_n, ones_s)


# ---------------------------------------------------------------------------
# Gradient-tracking baseline

@dataclass
class GTState:
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    grad: np.ndarray  # gradients at the current x, reused next round
    t: int = 0

    def copy(self) -> "GTState":
        return GTState(
            self.x.copy(), self.y.copy(), self.s.copy(), self.grad.copy(), self.t
        )


def init_gt_state(problem, x0: np.ndarray) -> GTState:
    x = np.array(x0, dtype=float)
    grad = problem.local_gradients(x)
    return GTState(x, x.copy(), grad.copy(), grad)


def gt_step(s: GTState, problem, W: np.ndarray, h: HyperParams) -> GTState:
    """Descent step followed by dynamic average consensus on the stacked
    (estimate, gradient) signals."""
    x_next = s.x + h.gamma * (s.y - s.x) - h.gamma * h.delta * s.s
    grad_next = problem.local_gradients(x_next)
    y_next = consensus.average_consensus_step(s.y, x_next - s.x, W)
    s_next = consensus.average_consensus_step(s.s, grad_next - s.grad, W)
    return GTState(x_next, y_next, s_next, grad_next, s.t + 1)


# ---------------------------------------------------------------------------
# Push-sum-based robust tracker

@dataclass
class PSTrackState:
    x: np.ndarray
    ps: consensus.PushSumState
    t: int = 0

    def copy(self) -> "PSTrackState":
        return PSTrackState(self.x.copy(), self.ps.copy(), self.t)


def init_ps_state(problem, topo: Topology, x0: np.ndarray) -> PSTrackState:
    x = np.array(x0, dtype=float)
    signals = np.concatenate([x, problem.local_gradients(x)], axis=1)
    return PSTrackState(x, consensus.PushSumState(topo, signals))


def ps_tracking_step(
    s: PSTrackState,
    problem,
    topo: Topology,
    h: HyperParams,
    active,
    delivered,
    den_threshold: float = 0.2,
) -> PSTrackState:
    """Descent step driven by the ratio-consensus estimates.

    During delivery droughts an agent's denominator mass decays
    geometrically and fresh tracking increments get amplified by its
    inverse, which destabilizes the loop; agents therefore hold their
    estimate while their denominator is below `den_threshold`.
    """
    act = np.asarray(active, dtype=bool)
    n = s.x.shape[1]
    signals = np.concatenate([s.x, problem.local_gradients(s.x)], axis=1)
    ps_next = consensus.push_sum_step(s.ps, signals, act, delivered)
    est = ps_next.estimates()
    upd = act & (ps_next.den >= den_threshold)
    x_next = s.x.copy()
    x_next[upd] = (
        s.x[upd]
        + h.gamma * (est[upd, :n] - s.x[upd])
        - h.gamma * h.delta * est[upd, n:]
    )
    return PSTrackState(x_next, ps_next, s.t + 1)

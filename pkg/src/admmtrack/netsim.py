"""Deterministic schedules, noise injection, and the simulation loop."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import algorithms, consensus, problems
from .graph import Topology, metropolis_weights


class ScheduleError(RuntimeError):
    pass


@dataclass
class Schedule:
    """Activation and delivery bit sequences over a finite horizon.

    lam[t, i] flags agent i active at iteration t; beta[t, s] flags the
    message on directed slot s delivered at t.  psi = lam(receiver) * beta
    is the effective edge-update flag of the robust algorithm.  t_max is
    the smallest window within which every lam_i and psi_ij hits 1.
    """

    lam: np.ndarray
    beta: np.ndarray
    slot_owner: np.ndarray
    t_max: int

    @property
    def horizon(self) -> int:
        return self.lam.shape[0]

    @property
    def psi(self) -> np.ndarray:
        return self.lam[:, self.slot_owner] * self.beta

    def slice(self, t: int):
        return self.lam[t], self.beta[t]

    @classmethod
    def all_ones(cls, topo: Topology, T: int) -> "Schedule":
        return cls(
            np.ones((T, topo.n_agents), dtype=np.uint8),
            np.ones((T, topo.n_slots), dtype=np.uint8),
            topo.slot_owner,
            1,
        )


def _longest_zero_run(col: np.ndarray) -> int:
    idx = np.flatnonzero(col)
    T = col.shape[0]
    if idx.size == 0:
        return T
    return int(np.max(np.diff(np.r_[-1, idx, T])) - 1)


def _required_window(s: Schedule) -> int:
    seqs = np.concatenate([s.lam, s.psi], axis=1)
    runs = [_longest_zero_run(seqs[:, k]) for k in range(seqs.shape[1])]
    return max(runs) + 1


def verify_essentially_cyclic(s: Schedule, window: int) -> bool:
    """True iff every lam_i and psi_ij hits 1 in every length-`window`
    sliding window fully inside the horizon."""
    if window < 1:
        raise ValueError("window must be >= 1")
    seqs = np.concatenate([s.lam, s.psi], axis=1)
    for k in range(seqs.shape[1]):
        if _longest_zero_run(seqs[:, k]) >= window:
            return False
    return True


def bernoulli_schedule(
    topo: Topology,
    act_probs,
    delivery_probs,
    T: int,
    seed: int,
    max_redraws: int = 100,
) -> Schedule:
    """Independent Bernoulli draws per (agent, t) and (directed slot, t).

    `delivery_probs` are success probabilities (1 = never lost).  The
    realized t_max is measured from the draw; draws in which some agent or
    edge never fires are rejected and redrawn, up to `max_redraws` times.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    ap = np.broadcast_to(np.asarray(act_probs, dtype=float), (topo.n_agents,))
    dp = np.broadcast_to(np.asarray(delivery_probs, dtype=float), (topo.n_slots,))
    if np.any(ap <= 0) or np.any(ap > 1) or np.any(dp <= 0) or np.any(dp > 1):
        raise ScheduleError("probabilities must lie in (0, 1]")
    for attempt in range(max_redraws):
        rng = np.random.default_rng([seed, attempt])
        lam = (rng.random((T, topo.n_agents)) < ap).astype(np.uint8)
        beta = (rng.random((T, topo.n_slots)) < dp).astype(np.uint8)
        sched = Schedule(lam, beta, topo.slot_owner, 0)
        window = _required_window(sched)
        if window <= T:
            sched.t_max = window
            return sched
    raise ScheduleError(
        f"no essentially cyclic draw in {max_redraws} attempts (T={T})"
    )


def random_bernoulli_schedule(topo: Topology, T: int, seed: int) -> Schedule:
    """Activation and delivery probabilities drawn uniformly from [0.1, 1)."""
    rng = np.random.default_rng([seed, 0x5EED])
    ap = rng.uniform(0.1, 1.0, size=topo.n_agents)
    dp = rng.uniform(0.1, 1.0, size=topo.n_slots)
    return bernoulli_schedule(topo, ap, dp, T, seed)


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian disturbances of variance eps added to every
    persisted state component after each step."""

    eps: float
    seed: int = 0

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")


@dataclass
class Trace:
    t: np.ndarray
    err_opt: np.ndarray
    err_max_agent: np.ndarray
    err_consensus: np.ndarray
    x_star: np.ndarray
    snapshots: dict | None = None

    def __len__(self):
        return self.t.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,err_opt,err_max_agent,err_consensus\n")
        for k in range(len(self)):
            buf.write(
                "%d,%.17g,%.17g,%.17g\n"
                % (
                    self.t[k],
                    self.err_opt[k],
                    self.err_max_agent[k],
                    self.err_consensus[k],
                )
            )
        return buf.getvalue()


def _errors(x: np.ndarray, x_star: np.ndarray):
    diff = x - x_star
    mean = x.mean(axis=0)
    return (
        float(np.linalg.norm(diff)),
        float(np.max(np.linalg.norm(diff, axis=1))),
        float(np.linalg.norm(x - mean)),
    )


ALGORITHMS = ("ATG", "RATG", "GT", "PS")


def run_simulation(
    algo: str,
    problem,
    topo: Topology,
    h: algorithms.HyperParams,
    schedule: Schedule | None,
    noise: NoiseSpec | None,
    T: int,
    init_seed: int,
    x_star: np.ndarray | None = None,
    snapshot_stride: int = 0,
) -> Trace:
    """Run T iterations of the chosen algorithm and record error metrics.

    Estimates and edge variables initialize uniformly in [-5, 5] from
    `init_seed`; disturbances (if any) are injected after every step,
    regardless of activation flags.  Fully deterministic given the seeds.
    """
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}, expected one of {ALGORITHMS}")
    if algo in ("RATG", "PS"):
        if schedule is None:
            raise ValueError(f"{algo} requires a schedule")
        if schedule.horizon < T:
            raise ValueError("schedule horizon shorter than T")
    n = problem.n
    if problem.N != topo.n_agents:
        raise ValueError("problem and topology disagree on the number of agents")
    if x_star is None:
        x_star = problems.centralized_solve(problem)

    rng = np.random.default_rng(init_seed)
    x0 = rng.uniform(-5.0, 5.0, size=(topo.n_agents, n))
    z0 = rng.uniform(-5.0, 5.0, size=(topo.n_slots, 2 * n))
    noise_rng = np.random.default_rng(noise.seed) if noise is not None else None
    sigma = np.sqrt(noise.eps) if noise is not None else 0.0

    if algo in ("ATG", "RATG"):
        state = algorithms.NetworkState(x0, z0)
    elif algo == "GT":
        state = algorithms.init_gt_state(problem, x0)
        W = metropolis_weights(topo)
    else:
        state = algorithms.init_ps_state(problem, topo, x0)

    ones_n = np.ones(topo.n_agents, dtype=np.uint8)
    ones_s = np.ones(topo.n_slots, dtype=np.uint8)

    errs = np.empty((T + 1, 3))
    errs[0] = _errors(x0, x_star)
    snaps = {} if snapshot_stride else None
    if snaps is not None:
        snaps[0] = x0.copy()

    for t in range(T):
        if algo == "ATG":
            state = algorithms.ratg_step(state, problem, topo, h, ones_n, ones_s)
        elif algo == "RATG":
            lam, beta = schedule.slice(t)
            state = algorithms.ratg_step(state, problem, topo, h, lam, beta)
        elif algo == "GT":
            state = algorithms.gt_step(state, problem, W, h)
        else:
            lam, beta = schedule.slice(t)
            state = algorithms.ps_tracking_step(state, problem, topo, h, lam, beta)

        if noise_rng is not None and sigma > 0.0:
            _inject_noise(state, sigma, noise_rng)

        errs[t + 1] = _errors(state.x, x_star)
        if snaps is not None and (t + 1) % snapshot_stride == 0:
            snaps[t + 1] = state.x.copy()

    return Trace(
        np.arange(T + 1),
        errs[:, 0],
        errs[:, 1],
        errs[:, 2],
        np.asarray(x_star),
        snaps,
    )


def _inject_noise(state, sigma: float, rng: np.random.Generator) -> None:
    """Perturb every persisted component of the algorithm state."""
    if isinstance(state, algorithms.NetworkState):
        arrays = [state.x, state.z]
    elif isinstance(state, algorithms.GTState):
        arrays = [state.x, state.y, state.s]
    elif isinstance(state, algorithms.PSTrackState):
        ps = state.ps
        arrays = [
            state.x,
            ps.num,
            ps.den,
            ps.sigma_num,
            ps.sigma_den,
            ps.recv_num,
            ps.recv_den,
        ]
    else:  # pragma: no cover
        raise TypeError(f"unknown state type {type(state)!r}")
    for a in arrays:
        a += rng.normal(0.0, sigma, size=a.shape)

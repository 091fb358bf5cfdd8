"""Numeric verification of the aggregate linear algebra, spectral-radius
rate tuning for quadratic instances, and trace post-processing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import algorithms, consensus
from .graph import Topology
from .problems import QuadraticProblem


class AnalysisError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Aggregate matrices of the edge-variable dynamics

@dataclass
class AggregateMatrices:
    """Dense aggregate-form matrices for a given topology, dimension, rho.

    Edge-slot ordering is lexicographic by (owner, sorted neighbor), fixed
    library-wide; each slot contributes a 2n-row block laid out as
    [estimate part; gradient part].
    """

    topology: Topology
    n: int
    rho: float
    P: np.ndarray        # slot-swap permutation, (2nD, 2nD)
    A: np.ndarray        # slot -> owner selector, (2nD, 2Nn)
    A_x: np.ndarray      # estimate-row selector, (2nD, Nn)
    A_grad: np.ndarray   # gradient-row selector, (2nD, Nn)
    H: np.ndarray        # (Nn, Nn) blocks I_n / (1 + rho d_i)
    Hcal: np.ndarray     # (2Nn, 2Nn) blocks I_2n / (1 + rho d_i)
    E_x: np.ndarray      # interleave x into stacked signals, (2Nn, Nn)
    E_grad: np.ndarray   # interleave gradients, (2Nn, Nn)

    @property
    def K(self) -> np.ndarray:
        """Edge-dynamics core I + P - 2 rho P A Hcal A^T."""
        dim = self.P.shape[0]
        return np.eye(dim) + self.P - 2.0 * self.rho * self.P @ self.A @ self.Hcal @ self.A.T


def build_aggregate_matrices(t: Topology, n: int, rho: float) -> AggregateMatrices:
    if rho <= 0:
        raise ValueError("rho must be > 0")
    N, S = t.n_agents, t.n_slots
    two_n = 2 * n
    dim_z = two_n * S

    P = np.zeros((dim_z, dim_z))
    A = np.zeros((dim_z, two_n * N))
    A_x = np.zeros((dim_z, n * N))
    A_grad = np.zeros((dim_z, n * N))
    I2n = np.eye(two_n)
    In = np.eye(n)
    for s in range(S):
        r0 = two_n * s
        P[r0 : r0 + two_n, two_n * t.slot_rev[s] : two_n * t.slot_rev[s] + two_n] = I2n
        i = t.slot_owner[s]
        A[r0 : r0 + two_n, two_n * i : two_n * (i + 1)] = I2n
        A_x[r0 : r0 + n, n * i : n * (i + 1)] = In
        A_grad[r0 + n : r0 + two_n, n * i : n * (i + 1)] = In

    scale = 1.0 / (1.0 + rho * t.degrees.astype(float))
    H = np.kron(np.diag(scale), In)
    Hcal = np.kron(np.diag(scale), I2n)

    E_x = np.zeros((two_n * N, n * N))
    E_grad = np.zeros((two_n * N, n * N))
    for i in range(N):
        E_x[two_n * i : two_n * i + n, n * i : n * (i + 1)] = In
        E_grad[two_n * i + n : two_n * (i + 1), n * i : n * (i + 1)] = In

    return AggregateMatrices(t, n, rho, P, A, A_x, A_grad, H, Hcal, E_x, E_grad)


@dataclass
class KernelBasis:
    B: np.ndarray
    M: np.ndarray
    b: int
    svd_tol: float


def kernel_basis(m: AggregateMatrices, svd_tol: float = 1e-9) -> KernelBasis:
    """Orthonormal split of the edge-variable space into the numerical
    kernel of K (stationary directions) and its complement."""
    if not (0 < svd_tol <= 1e-3):
        raise ValueError("svd_tol must lie in (0, 1e-3]")
    K = m.K
    _, sv, Vt = np.linalg.svd(K)
    smax = sv[0]
    null_mask = sv <= svd_tol * smax
    b = int(null_mask.sum())  # trees have b == 0; cycles contribute 2n each
    kept = sv[~null_mask]
    if kept.size and kept.min() < 10.0 * svd_tol * smax:
        raise AnalysisError(
            f"ill-separated spectrum: smallest kept singular value "
            f"{kept.min():.3e} vs threshold {svd_tol * smax:.3e}"
        )
    B = Vt[null_mask].T
    M = Vt[~null_mask].T
    return KernelBasis(B, M, b, svd_tol)


def check_lemma1(kb: KernelBasis, m: AggregateMatrices) -> dict:
    """Max-abs residuals of the structural identities satisfied by the
    kernel basis; passes when all are <= 1e-9."""
    K = m.K
    residuals = {
        "Ax_T_B": float(np.abs(m.A_x.T @ kb.B).max(initial=0.0)),
        "Agrad_T_B": float(np.abs(m.A_grad.T @ kb.B).max(initial=0.0)),
        "B_T_PA": float(np.abs(kb.B.T @ m.P @ m.A).max(initial=0.0)),
        "B_T_K": float(np.abs(kb.B.T @ K).max(initial=0.0)),
    }
    return {
        "check": "kernel_identities",
        "params": {"rho": m.rho, "n": m.n, "b": kb.b,
                   "n_agents": m.topology.n_agents,
                   "shape_K": list(K.shape)},
        "residuals": residuals,
        "pass": all(v <= 1e-9 for v in residuals.values()),
    }


def contraction_matrix(kb: KernelBasis, m: AggregateMatrices) -> np.ndarray:
    """F = M^T K M, the edge dynamics restricted to the contracting space."""
    return kb.M.T @ m.K @ kb.M


def check_schur_F(kb: KernelBasis, m: AggregateMatrices, alphas) -> dict:
    """Spectral radius of I - alpha F for each alpha; passes when all are
    strictly inside the unit circle."""
    F = contraction_matrix(kb, m)
    dim = F.shape[0]
    radii = {}
    for a in alphas:
        if not (0.0 < a < 1.0):
            raise ValueError("alphas must lie in (0, 1)")
        radii[float(a)] = float(
            np.abs(np.linalg.eigvals(np.eye(dim) - a * F)).max()
        )
    return {
        "check": "contraction_schur",
        "params": {"rho": m.rho, "n": m.n, "alphas": [float(a) for a in alphas]},
        "residuals": radii,
        "pass": all(r < 1.0 - 1e-12 for r in radii.values()),
    }


def schur_radius_full(kb: KernelBasis, m: AggregateMatrices, alpha: float) -> float:
    """Independent route to the same spectral radius: eigenvalues of the
    full update I - alpha K with the b unit eigenvalues removed."""
    dim = m.P.shape[0]
    ev = np.linalg.eigvals(np.eye(dim) - alpha * m.K)
    mods = np.sort(np.abs(ev))[::-1]
    order = np.argsort(np.abs(ev - 1.0))
    keep = np.ones(dim, dtype=bool)
    keep[order[: kb.b]] = False
    return float(np.abs(ev[keep]).max())


def _flatten_x(x, N, n):
    x = np.asarray(x, dtype=float)
    return x.reshape(N * n)


def _signals(problem, x_flat: np.ndarray) -> np.ndarray:
    N, n = problem.N, problem.n
    X = x_flat.reshape(N, n)
    G = problem.local_gradients(X)
    out = np.empty(2 * N * n)
    for i in range(N):
        out[2 * n * i : 2 * n * i + n] = X[i]
        out[2 * n * i + n : 2 * n * (i + 1)] = G[i]
    return out


def equilibrium_residuals(kb: KernelBasis, m: AggregateMatrices, problem, x) -> dict:
    """Residuals of the equilibrium identities of the fast edge dynamics
    evaluated at estimates `x`; passes at <= 1e-8."""
    t = m.topology
    N, n = t.n_agents, m.n
    x_flat = _flatten_x(x, N, n)
    F = contraction_matrix(kb, m)
    radius = float(np.abs(np.linalg.eigvals(np.eye(F.shape[0]) - 0.5 * F)).max())
    if radius >= 1.0:
        raise AnalysisError(
            "contraction matrix is not Schur at alpha=0.5; equilibrium "
            "map undefined"
        )
    v = _signals(problem, x_flat)
    z_eq = 2.0 * m.rho * np.linalg.solve(F, kb.M.T @ m.P @ m.A @ m.Hcal @ v)

    ones_proj = np.kron(np.ones((N, N)) / N, np.eye(n))
    G = problem.local_gradients(x_flat.reshape(N, n)).reshape(N * n)
    r1 = m.H @ m.A_x.T @ kb.M @ z_eq - (ones_proj @ x_flat - m.H @ x_flat)
    r2 = m.H @ m.A_grad.T @ kb.M @ z_eq - (ones_proj @ G - m.H @ G)
    residuals = {
        "estimate_avg": float(np.linalg.norm(r1)),
        "gradient_avg": float(np.linalg.norm(r2)),
    }
    return {
        "check": "equilibrium_identities",
        "params": {"rho": m.rho, "n": m.n, "n_agents": N},
        "residuals": residuals,
        "pass": all(val <= 1e-8 for val in residuals.values()),
        "z_eq": z_eq,
    }


# ---------------------------------------------------------------------------
# Closed-loop affine maps for quadratic instances

def closed_loop_matrix(
    algo: str,
    problem: QuadraticProblem,
    topo: Topology,
    h: algorithms.HyperParams,
):
    """Exact affine map of one round for quadratic costs.

    Returns (T, c) with next_state = T @ state + c.  For the ADMM tracker
    the state stacks (x, z); for the gradient-tracking baseline it stacks
    (x, y, s)."""
    if not isinstance(problem, QuadraticProblem):
        raise ValueError("closed-loop form requires a quadratic problem")
    N, n = problem.N, problem.n
    Qblk = np.zeros((N * n, N * n))
    for i in range(N):
        Qblk[n * i : n * (i + 1), n * i : n * (i + 1)] = problem.Q[i]
    rvec = problem.r.reshape(N * n)
    Inn = np.eye(N * n)
    g, d = h.gamma, h.delta

    if algo == "ATG":
        m = build_aggregate_matrices(topo, n, h.rho)
        K = m.K
        dim_z = K.shape[0]
        T_xx = Inn + g * (m.H - Inn) - g * d * m.H @ Qblk
        T_xz = g * m.H @ m.A_x.T - g * d * m.H @ m.A_grad.T
        c_x = -g * d * m.H @ rvec
        PAH = m.P @ m.A @ m.Hcal
        T_zx = 2.0 * h.alpha * h.rho * PAH @ (m.E_x + m.E_grad @ Qblk)
        T_zz = np.eye(dim_z) - h.alpha * K
        c_z = 2.0 * h.alpha * h.rho * PAH @ m.E_grad @ rvec
        T = np.block([[T_xx, T_xz], [T_zx, T_zz]])
        c = np.concatenate([c_x, c_z])
        return T, c

    if algo == "GT":
        from .graph import metropolis_weights

        Wn = np.kron(metropolis_weights(topo), np.eye(n))
        D_xx = g * (np.zeros_like(Inn)) - g * Inn  # x-increment: g*(y-x)-g*d*s
        inc_x = -g * Inn
        inc_y = g * Inn
        inc_s = -g * d * Inn
        T = np.block(
            [
                [Inn + inc_x, inc_y, inc_s],
                [inc_x, Wn + inc_y, inc_s],
                [Qblk @ inc_x, Qblk @ inc_y, Wn + Qblk @ inc_s],
            ]
        )
        c = np.zeros(3 * N * n)
        return T, c

    raise ValueError(f"closed-loop form not available for algo {algo!r}")


def affine_fixed_point(T: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Least-squares fixed point of state -> T state + c (the map may have
    a stationary subspace, hence lstsq)."""
    dim = T.shape[0]
    sol, *_ = np.linalg.lstsq(np.eye(dim) - T, c, rcond=None)
    return sol


def observable_rate(T: np.ndarray, x_dim: int) -> float | None:
    """Largest non-unit eigenvalue modulus among modes visible in the
    leading `x_dim` state coordinates.

    Modes whose eigenvector has a (numerically) zero solution-estimate
    block never contribute to the estimate error and are skipped, as are
    the stationary unit-modulus modes."""
    ev, vec = np.linalg.eig(T)
    mods = np.abs(ev)
    x_part = np.linalg.norm(vec[:x_dim], axis=0)
    keep = (np.abs(mods - 1.0) > 1e-9) & (x_part > 1e-8)
    if not keep.any():
        return None
    return float(mods[keep].max())


def trajectory_spectral_rate(
    T: np.ndarray,
    c: np.ndarray,
    state0: np.ndarray,
    x_dim: int,
    t_probe: int,
) -> float:
    """Modulus of the eigenmode dominating the estimate error at t_probe.

    Computed from the affine map and the initial state alone: the
    deviation from the fixed point is expanded in eigenmodes, each mode
    weighted by its coefficient times its estimate-block size, and the
    mode with the largest weight * |mu|^t_probe wins.  Predicts the decay
    rate a log-linear fit around t_probe will observe."""
    ev, vec = np.linalg.eig(T)
    dev = state0 - affine_fixed_point(T, c)
    coef = np.linalg.solve(vec, dev.astype(complex))
    weight = np.abs(coef) * np.linalg.norm(vec[:x_dim], axis=0)
    mods = np.abs(ev)
    keep = (np.abs(mods - 1.0) > 1e-9) & (weight > 0.0)
    if not keep.any():
        raise AnalysisError("no decaying estimate-visible mode is excited")
    with np.errstate(divide="ignore"):
        log_score = np.where(keep, np.log(weight + 1e-300) + t_probe * np.log(mods), -np.inf)
    return float(mods[np.argmax(log_score)])


def rate_line_search(algo: str, problem, topo: Topology, grid) -> tuple:
    """Pick the grid point minimizing the largest non-unit eigenvalue
    modulus of the closed-loop matrix; returns (best HyperParams, rate).

    The whole state is scored, not just the estimate block; use
    `observable_rate` at the chosen point to predict the decay of the
    estimate error alone."""
    best = None
    best_rate = np.inf
    degenerate = True
    for h in grid:
        T, _ = closed_loop_matrix(algo, problem, topo, h)
        mods = np.abs(np.linalg.eigvals(T))
        mods = mods[np.abs(mods - 1.0) > 1e-9]
        if mods.size == 0:
            continue
        degenerate = False
        rate = float(mods.max())
        if rate < best_rate:
            best_rate = rate
            best = h
    if best is None:
        if degenerate:
            raise AnalysisError("all eigenvalues have unit modulus on the grid")
        raise AnalysisError("empty parameter grid")
    return best, best_rate


# ---------------------------------------------------------------------------
# Trace post-processing

def convergence_rate_fit(trace, tail_fraction: float, eps_floor: float = 1e-14) -> dict:
    """Least-squares fit err ~ c1 * exp(-c2 t) on the trace tail.

    Entries at or below `eps_floor` are dropped (saturation at machine
    precision); at least 10 points must remain."""
    if not (0.0 < tail_fraction <= 1.0):
        raise ValueError("tail_fraction must lie in (0, 1]")
    t = np.asarray(trace.t, dtype=float)
    err = np.asarray(trace.err_max_agent, dtype=float)
    floor = max(eps_floor, 3.0 * float(err.min()))
    saturated = np.flatnonzero(err <= floor)
    if saturated.size:  # cut the numerical-precision plateau before windowing
        t, err = t[: saturated[0]], err[: saturated[0]]
    start = int(np.floor(len(t) * (1.0 - tail_fraction)))
    t, err = t[start:], err[start:]
    good = err > eps_floor
    t, err = t[good], err[good]
    if t.size < 10:
        raise AnalysisError("fewer than 10 usable points in the fit window")
    y = np.log(err)
    A = np.vstack([t, np.ones_like(t)]).T
    (slope, intercept), res, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ np.array([slope, intercept])
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return {"c1": float(np.exp(intercept)), "c2": float(-slope), "r_squared": r2}


# ---------------------------------------------------------------------------
# Protocol memory accounting

def protocol_memory(protocol: str, t: Topology) -> dict:
    """Per-agent persisted slot counts, cross-checked against the live
    implementations' state layouts."""
    expected = consensus.protocol_memory_counts(protocol, t)
    if protocol == "average":
        actual = np.ones(t.n_agents, dtype=np.int64)
    elif protocol == "push-sum":
        state = consensus.PushSumState(t, np.zeros((t.n_agents, 2)))
        per_agent = np.zeros(t.n_agents, dtype=np.int64)
        per_agent += 1  # num
        per_agent += 1  # den
        per_agent += 1  # sigma_num
        per_agent += 1  # sigma_den
        np.add.at(per_agent, t.slot_owner, 1)  # recv_num rows
        np.add.at(per_agent, t.slot_owner, 1)  # recv_den rows
        assert state.recv_num.shape[0] == t.n_slots
        actual = per_agent
    elif protocol == "admm":
        state = algorithms.init_network_state(t, 1)
        actual = np.zeros(t.n_agents, dtype=np.int64)
        np.add.at(actual, t.slot_owner, 1)
        assert state.z.shape[0] == t.n_slots
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    return {
        "check": "protocol_memory",
        "params": {"protocol": protocol},
        "counts": expected.tolist(),
        "pass": bool(np.array_equal(expected, actual)),
    }

"""Local cost functions, gradients, and the centralized oracle solver."""

from __future__ import annotations

import json

import numpy as np


class SolverError(RuntimeError):
    pass


class QuadraticProblem:
    """Sum of local costs f_i(x) = x'Q_i x / 2 + r_i'x.

    Every Q_i must be symmetric positive definite; the aggregate objective
    is then strongly convex with mu = lambda_min(sum Q_i) and each local
    gradient is Lipschitz with L = max_i lambda_max(Q_i).
    """

    kind = "quadratic"

    def __init__(self, Q: np.ndarray, r: np.ndarray):
        Q = np.asarray(Q, dtype=float)
        r = np.asarray(r, dtype=float)
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2] or r.shape != Q.shape[:2]:
            raise ValueError("Q must be (N, n, n) and r (N, n)")
        for i in range(Q.shape[0]):
            if not np.allclose(Q[i], Q[i].T, atol=1e-12):
                raise ValueError(f"Q_{i} is not symmetric")
            if np.linalg.eigvalsh(Q[i]).min() <= 1e-12:
                raise ValueError(f"Q_{i} is not positive definite")
        self.Q = Q
        self.r = r
        self.N, self.n = r.shape
        self.mu = float(np.linalg.eigvalsh(Q.sum(axis=0)).min())
        self.L = float(max(np.linalg.eigvalsh(Q[i]).max() for i in range(self.N)))

    def local_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected x of shape ({self.n},), got {x.shape}")
        return self.Q[i] @ x + self.r[i]

    def local_gradients(self, X: np.ndarray) -> np.ndarray:
        """Gradients of all agents at their own estimates, X of shape (N, n)."""
        return np.einsum("ijk,ik->ij", self.Q, X) + self.r

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind, "Q": self.Q.tolist(), "r": self.r.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "QuadraticProblem":
        d = json.loads(text)
        return cls(np.array(d["Q"]), np.array(d["r"]))


class LogisticProblem:
    """Regularized logistic regression split across agents.

    The decision variable is theta = (w, b) in R^n with features in
    R^(n-1).  The global regularizer (C/2)||theta||^2 is split as
    (C/2N)||theta||^2 per agent so that the sum of local costs reproduces
    the single global objective while each f_i stays strongly convex.
    """

    kind = "logistic"

    def __init__(self, points, labels, C: float):
        if C <= 0:
            raise ValueError("C must be > 0")
        self.points = [np.asarray(p, dtype=float) for p in points]
        self.labels = [np.asarray(l, dtype=float) for l in labels]
        self.N = len(self.points)
        if self.N == 0:
            raise ValueError("need at least one agent")
        self.n = self.points[0].shape[1] + 1
        for p, l in zip(self.points, self.labels):
            if p.shape[0] < 1 or p.shape[0] != l.shape[0]:
                raise ValueError("each agent needs m_i >= 1 labeled points")
            if not np.all(np.isin(l, (-1.0, 1.0))):
                raise ValueError("labels must be +-1")
        self.C = float(C)
        self.mu = float(C)  # strong convexity of the summed objective
        self.L = float(
            max(
                0.25 * (np.sum(p**2) + p.shape[0]) + C / self.N
                for p in self.points
            )
        )

    def local_gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected x of shape ({self.n},), got {x.shape}")
        p, l = self.points[i], self.labels[i]
        w, b = x[:-1], x[-1]
        margin = l * (p @ w + b)
        sig = _sigmoid(-margin)  # 1/(1+e^{margin})
        coeff = -l * sig
        g = np.empty(self.n)
        g[:-1] = coeff @ p
        g[-1] = coeff.sum()
        return g + (self.C / self.N) * x

    def local_gradients(self, X: np.ndarray) -> np.ndarray:
        return np.stack([self.local_gradient(i, X[i]) for i in range(self.N)])

    def local_value(self, i: int, x: np.ndarray) -> float:
        p, l = self.points[i], self.labels[i]
        margin = l * (p @ x[:-1] + x[-1])
        return float(
            np.logaddexp(0.0, -margin).sum() + 0.5 * self.C / self.N * x @ x
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "C": self.C,
                "points": [p.tolist() for p in self.points],
                "labels": [l.tolist() for l in self.labels],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LogisticProblem":
        d = json.loads(text)
        return cls(d["points"], d["labels"], d["C"])


def _sigmoid(t):
    out = np.empty_like(t, dtype=float)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def local_gradient(p, i: int, x: np.ndarray) -> np.ndarray:
    """Exact analytic gradient of agent i's local cost at x."""
    return p.local_gradient(i, x)


def global_gradient(p, x: np.ndarray) -> np.ndarray:
    return sum(p.local_gradient(i, x) for i in range(p.N))


def random_quadratic(
    N: int,
    n: int,
    eig_lo: float,
    eig_hi: float,
    r_lo: float,
    r_hi: float,
    seed: int,
) -> QuadraticProblem:
    """Seeded random instance: Q_i has uniform spectrum in [eig_lo, eig_hi]
    under a random orthogonal frame, r_i components uniform in [r_lo, r_hi]."""
    if not (0 < eig_lo <= eig_hi):
        raise ValueError("need 0 < eig_lo <= eig_hi")
    rng = np.random.default_rng(seed)
    Q = np.empty((N, n, n))
    for i in range(N):
        V, _ = np.linalg.qr(rng.standard_normal((n, n)))
        lam = rng.uniform(eig_lo, eig_hi, size=n)
        Q[i] = (V * lam) @ V.T
        Q[i] = 0.5 * (Q[i] + Q[i].T)
    r = rng.uniform(r_lo, r_hi, size=(N, n))
    return QuadraticProblem(Q, r)


def random_logistic(
    N: int, n: int, m_per_agent: int, C: float, seed: int
) -> LogisticProblem:
    """Seeded random instance: points uniform in [-5, 5]^(n-1), labels +-1."""
    if n < 2 or m_per_agent < 1:
        raise ValueError("need n >= 2 and m_per_agent >= 1")
    rng = np.random.default_rng(seed)
    points = [rng.uniform(-5.0, 5.0, size=(m_per_agent, n - 1)) for _ in range(N)]
    labels = [rng.choice([-1.0, 1.0], size=m_per_agent) for _ in range(N)]
    return LogisticProblem(points, labels, C)


def centralized_solve(p, tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """Oracle minimizer of the summed objective, ||sum grad|| <= tol.

    Quadratics are solved by direct factorization; logistic instances by a
    damped Newton iteration on the full sum.
    """
    if isinstance(p, QuadraticProblem):
        return np.linalg.solve(p.Q.sum(axis=0), -p.r.sum(axis=0))
    x = np.zeros(p.n)
    for _ in range(max_iter):
        g = global_gradient(p, x)
        gnorm = np.linalg.norm(g)
        if gnorm <= tol:
            return x
        H = _logistic_hessian(p, x)
        step = np.linalg.solve(H, g)
        # backtracking on the full objective; inside the quadratic basin the
        # decrease falls below float precision, so take the full step there
        t = 1.0
        if gnorm > 1e-3:
            f0 = sum(p.local_value(i, x) for i in range(p.N))
            while t > 1e-12:
                xn = x - t * step
                fn = sum(p.local_value(i, xn) for i in range(p.N))
                if fn <= f0 - 1e-4 * t * (g @ step):
                    break
                t *= 0.5
        x = x - t * step
    gnorm = np.linalg.norm(global_gradient(p, x))
    if gnorm > tol:
        raise SolverError(f"Newton stalled, residual norm {gnorm:.3e}")
    return x


def _logistic_hessian(p: LogisticProblem, x: np.ndarray) -> np.ndarray:
    H = p.C * np.eye(p.n)
    for i in range(p.N):
        pts, l = p.points[i], p.labels[i]
        margin = l * (pts @ x[:-1] + x[-1])
        s = _sigmoid(-margin)
        wgt = s * (1.0 - s)
        Phi = np.hstack([pts, np.ones((pts.shape[0], 1))])
        H += (Phi * wgt[:, None]).T @ Phi
    return H

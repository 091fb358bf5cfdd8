"""Pure-numpy implementation of the hot tracking-step kernel.

Used when the compiled extension is unavailable (or explicitly disabled
via ADMMTRACK_FORCE_PURE=1).  Semantics are identical to the compiled
kernel; see `_core.pyx`.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def tracking_step(
    x,
    grad,
    z,
    active,
    zflag,
    deg,
    slot_owner,
    slot_rev,
    slot_peer,
    gamma,
    delta,
    alpha,
    rho,
):
    """One round of the ADMM-tracking update with activation/loss flags.

    x, grad: (N, n); z: (S, 2n); active: (N,) bool-like; zflag: (S,)
    effective edge-update flags (receiver active, message delivered,
    sender active).  Returns (x_next, z_next, ys) computed from the
    pre-update state; ys rows of inactive agents are zero.
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    z = np.asarray(z, dtype=float)
    act = np.asarray(active, dtype=bool)
    zf = np.asarray(zflag, dtype=bool)
    n = x.shape[1]

    u = np.concatenate([x, grad], axis=1)
    zsum = np.zeros_like(u)
    if z.shape[0]:
        np.add.at(zsum, slot_owner, z)
    ys = (u + zsum) / (1.0 + rho * np.asarray(deg, dtype=float))[:, None]
    ys[~act] = 0.0

    x_next = x.copy()
    x_next[act] = (
        x[act]
        + gamma * (ys[act, :n] - x[act])
        - gamma * delta * ys[act, n:]
    )

    z_next = z.copy()
    if z.shape[0]:
        q = -z[slot_rev] + 2.0 * rho * ys[slot_peer]
        z_next[zf] = (1.0 - alpha) * z[zf] + alpha * q[zf]
    return x_next, z_next, ys

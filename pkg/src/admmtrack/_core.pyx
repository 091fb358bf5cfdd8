# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernel: one ADMM-tracking round with activation flags."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def tracking_step(
    object x_in,
    object grad_in,
    object z_in,
    object active_in,
    object zflag_in,
    object deg_in,
    object slot_owner_in,
    object slot_rev_in,
    object slot_peer_in,
    double gamma,
    double delta,
    double alpha,
    double rho,
):
    """Same contract as the pure-python fallback `tracking_step`."""
    cdef double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[:, ::1] grad = np.ascontiguousarray(grad_in, dtype=np.float64)
    cdef double[:, ::1] z = np.ascontiguousarray(z_in, dtype=np.float64)
    cdef cnp.uint8_t[::1] active = np.ascontiguousarray(active_in, dtype=np.uint8)
    cdef cnp.uint8_t[::1] zflag = np.ascontiguousarray(zflag_in, dtype=np.uint8)
    cdef cnp.int64_t[::1] deg = np.ascontiguousarray(deg_in, dtype=np.int64)
    cdef cnp.int64_t[::1] owner = np.ascontiguousarray(slot_owner_in, dtype=np.int64)
    cdef cnp.int64_t[::1] rev = np.ascontiguousarray(slot_rev_in, dtype=np.int64)
    cdef cnp.int64_t[::1] peer = np.ascontiguousarray(slot_peer_in, dtype=np.int64)

    cdef Py_ssize_t N = x.shape[0]
    cdef Py_ssize_t n = x.shape[1]
    cdef Py_ssize_t S = z.shape[0]
    cdef Py_ssize_t two_n = 2 * n

    x_next_arr = np.array(x, copy=True)
    z_next_arr = np.array(z, copy=True)
    ys_arr = np.zeros((N, two_n), dtype=np.float64)
    cdef double[:, ::1] x_next = x_next_arr
    cdef double[:, ::1] z_next = z_next_arr
    cdef double[:, ::1] ys = ys_arr

    cdef Py_ssize_t i, k, s
    cdef double denom, q

    # local estimates from the pre-update state
    for s in range(S):
        i = owner[s]
        for k in range(two_n):
            ys[i, k] += z[s, k]
    for i in range(N):
        if active[i]:
            denom = 1.0 + rho * deg[i]
            for k in range(n):
                ys[i, k] = (ys[i, k] + x[i, k]) / denom
                ys[i, n + k] = (ys[i, n + k] + grad[i, k]) / denom
            for k in range(n):
                x_next[i, k] = (
                    x[i, k]
                    + gamma * (ys[i, k] - x[i, k])
                    - gamma * delta * ys[i, n + k]
                )
        else:
            for k in range(two_n):
                ys[i, k] = 0.0

    # relaxed edge updates where the peer's message arrived
    for s in range(S):
        if zflag[s]:
            i = peer[s]
            for k in range(two_n):
                q = -z[rev[s], k] + 2.0 * rho * ys[i, k]
                z_next[s, k] = (1.0 - alpha) * z[s, k] + alpha * q
    return x_next_arr, z_next_arr, ys_arr

"""Pure numpy Adams kernels.

Both entry points evolve the unknown ``u`` of the generic Volterra problem

    u(t) = I^alpha [ G(base(t) + u(t)) ],   G(h) = c0 + c1*h + c2*h**2,

where ``base(t) = beta * t**alpha`` (remainder form) or ``0`` (plain form).
Mode codes: 0 standard predictor-corrector, 1 asymptotic seed switched off
by a magnitude guard, 2 remainder form with previous-node predictor.

:func:`run_uniform` vectorizes over many spectral parameters on a uniform
grid (Toeplitz weights). :func:`run_dense` handles one spectral parameter on
an arbitrary grid with explicit weight rows.
"""

import numpy as np

MODE_STANDARD = 0
MODE_SEEDED = 1
MODE_REMAINDER = 2

BAD_UP = 1
BAD_DOWN = 2


def _bad_kind(h):
    return np.where(np.isfinite(h.real) & (h.real < 0), BAD_DOWN, BAD_UP)


def run_uniform(mode, c0, c1, c2, beta, thr, xi_abs, tpow, a0, conv, diag,
                pred, n_iter, switch_c):
    c0 = np.asarray(c0, dtype=np.complex128)
    c1 = np.asarray(c1, dtype=np.complex128)
    c2 = np.asarray(c2, dtype=np.complex128)
    beta = np.asarray(beta, dtype=np.complex128)
    nxi = c0.shape[0]
    M = a0.shape[0]
    remainder = mode == MODE_REMAINDER

    u = np.zeros((M + 1, nxi), dtype=np.complex128)
    G = np.zeros((M + 1, nxi), dtype=np.complex128)
    Gf = G.view(np.float64).reshape(M + 1, 2 * nxi)
    rconv = np.ascontiguousarray(conv[::-1])
    rpred = np.ascontiguousarray(pred[::-1])
    bad_index = np.full(nxi, -1, dtype=np.int64)
    bad_kind = np.zeros(nxi, dtype=np.int64)
    alive = np.ones(nxi, dtype=bool)
    switched = np.zeros(nxi, dtype=bool)

    def g(val, k):
        h = val + beta * tpow[k] if remainder else val
        return c0 + h * (c1 + c2 * h)

    G[0] = g(u[0], 0)
    with np.errstate(all="ignore"):
        for k in range(M):
            hist = a0[k] * G[0]
            if k:
                hist = hist + (rconv[M - k:] @ Gf[1:k + 1]).view(np.complex128)
            if mode == MODE_STANDARD:
                p = (rpred[M - k - 1:] @ Gf[:k + 1]).view(np.complex128)
                val = hist + diag * g(p, k + 1)
                for _ in range(n_iter - 1):
                    val = hist + diag * g(val, k + 1)
            else:
                if mode == MODE_SEEDED:
                    switched |= np.abs(u[k]) > switch_c * xi_abs
                    seed = np.where(switched, G[k],
                                    g(beta * tpow[k + 1], k + 1))
                else:
                    seed = G[k]
                val = hist + diag * seed
                for _ in range(n_iter):
                    val = hist + diag * g(val, k + 1)
            u[k + 1] = val
            G[k + 1] = g(val, k + 1)
            h = val + beta * tpow[k + 1] if remainder else val
            newly = alive & ~(np.isfinite(h) & (np.abs(h) <= thr))
            if newly.any():
                bad_index[newly] = k + 1
                bad_kind[newly] = _bad_kind(h[newly])
                alive &= ~newly
                # frozen columns keep finite garbage out of the shared matmul
                u[k + 1, newly] = 0
                G[k + 1, newly] = 0
    out = np.ascontiguousarray(u.T)
    for i in np.flatnonzero(bad_index >= 0):
        out[i, bad_index[i]:] = np.nan
    return out, bad_index, bad_kind


def run_dense(mode, c0, c1, c2, beta, thr, xi_abs, tpow, first, rows, diag,
              pred_rows, n_iter, switch_c):
    """Single spectral parameter on a non-uniform grid.

    ``rows[k]`` holds a_{j,k+1} for j = 1..k (length k), ``first[k]`` holds
    a_{0,k+1}; ``pred_rows[k]`` holds b_{j,k+1} for j = 0..k.
    """
    M = first.shape[0]
    remainder = mode == MODE_REMAINDER
    u = np.zeros(M + 1, dtype=np.complex128)
    G = np.zeros(M + 1, dtype=np.complex128)

    def g(val, k):
        h = val + beta * tpow[k] if remainder else val
        return c0 + h * (c1 + c2 * h)

    G[0] = g(0j, 0)
    switched = False
    with np.errstate(all="ignore"):
        for k in range(M):
            hist = first[k] * G[0] + np.dot(rows[k], G[1:k + 1])
            if mode == MODE_STANDARD:
                p = np.dot(pred_rows[k], G[:k + 1])
                val = hist + diag[k] * g(p, k + 1)
                for _ in range(n_iter - 1):
                    val = hist + diag[k] * g(val, k + 1)
            else:
                if mode == MODE_SEEDED:
                    switched = switched or abs(u[k]) > switch_c * xi_abs
                    seed = G[k] if switched else g(beta * tpow[k + 1], k + 1)
                else:
                    seed = G[k]
                val = hist + diag[k] * seed
                for _ in range(n_iter):
                    val = hist + diag[k] * g(val, k + 1)
            h = val + beta * tpow[k + 1] if remainder else val
            if not (np.isfinite(h) and abs(h) <= thr):
                u[k + 1:] = np.nan
                kind = BAD_DOWN if (np.isfinite(h.real) and h.real < 0) else BAD_UP
                return u, k + 1, kind
            u[k + 1] = val
            G[k + 1] = g(val, k + 1)
    return u, -1, 0

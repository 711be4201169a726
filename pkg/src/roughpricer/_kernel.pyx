# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled uniform-grid Adams kernel; same contract as ``_kernel_py.run_uniform``.

History is stored node-major (``G[j, i]``) so each weighted history sum is a
single BLAS ``dgemv`` over the interleaved real/imaginary parts; the
per-node corrector iterations run in C without touching Python objects.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport NAN, isfinite, sqrt
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()


cdef inline double complex _g(double complex c0, double complex c1,
                              double complex c2, double complex h) noexcept nogil:
    return c0 + h * (c1 + c2 * h)


cdef inline double _cabs(double complex z) noexcept nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef inline bint _finite(double complex z) noexcept nogil:
    return isfinite(z.real) and isfinite(z.imag)


def run_uniform(int mode, c0_in, c1_in, c2_in, beta_in, thr_in, xi_abs_in,
                tpow_in, a0_in, conv_in, double diag, pred_in, int n_iter,
                double switch_c):
    cdef double complex[::1] c0 = np.ascontiguousarray(c0_in, dtype=np.complex128)
    cdef double complex[::1] c1 = np.ascontiguousarray(c1_in, dtype=np.complex128)
    cdef double complex[::1] c2 = np.ascontiguousarray(c2_in, dtype=np.complex128)
    cdef double complex[::1] beta = np.ascontiguousarray(beta_in, dtype=np.complex128)
    cdef double[::1] thr = np.ascontiguousarray(thr_in, dtype=np.float64)
    cdef double[::1] xi_abs = np.ascontiguousarray(xi_abs_in, dtype=np.float64)
    cdef double[::1] tpow = np.ascontiguousarray(tpow_in, dtype=np.float64)
    cdef double[::1] a0 = np.ascontiguousarray(a0_in, dtype=np.float64)
    cdef double[::1] rconv = np.ascontiguousarray(np.asarray(conv_in, dtype=np.float64)[::-1])
    cdef double[::1] rpred = np.ascontiguousarray(np.asarray(pred_in, dtype=np.float64)[::-1])

    cdef Py_ssize_t nxi = c0.shape[0]
    cdef Py_ssize_t M = a0.shape[0]
    u_arr = np.zeros((M + 1, nxi), dtype=np.complex128)
    G_arr = np.zeros((M + 1, nxi), dtype=np.complex128)
    bad_index_arr = np.full(nxi, -1, dtype=np.int64)
    bad_kind_arr = np.zeros(nxi, dtype=np.int64)
    cdef double complex[:, ::1] u = u_arr
    cdef double complex[:, ::1] G = G_arr
    cdef long long[::1] bad_index = bad_index_arr
    cdef long long[::1] bad_kind = bad_kind_arr
    cdef double[:, ::1] Gf = G_arr.view(np.float64)
    hist_arr = np.zeros(nxi, dtype=np.complex128)
    prd_arr = np.zeros(nxi, dtype=np.complex128)
    cdef double complex[::1] hist = hist_arr
    cdef double complex[::1] prd = prd_arr
    cdef double[::1] histf = hist_arr.view(np.float64)
    cdef double[::1] prdf = prd_arr.view(np.float64)
    cdef Py_ssize_t nf = 2 * nxi
    cdef char[::1] alive = np.ones(nxi, dtype=np.int8)
    cdef char[::1] switched = np.zeros(nxi, dtype=np.int8)

    cdef Py_ssize_t i, k, it
    cdef double w
    cdef char trans = b'N'
    cdef int n_rows = <int>(2 * nxi), n_cols, inc = 1
    cdef double one = 1.0, zero = 0.0
    cdef double complex val, seed, h, bnext
    cdef bint remainder = mode == 2

    with nogil:
        for i in range(nxi):
            G[0, i] = _g(c0[i], c1[i], c2[i], 0)
        for k in range(M):
            # hist = a_{0,k+1} G_0 + sum_{j=1..k} conv[k-j] G_j; rconv[M-1-m] = conv[m]
            w = a0[k]
            for i in range(nf):
                histf[i] = w * Gf[0, i]
            n_cols = <int>k
            if k:
                dgemv(&trans, &n_rows, &n_cols, &one, &Gf[1, 0], &n_rows,
                      &rconv[M - k], &inc, &one, &histf[0], &inc)
            if mode == 0:
                # prd = sum_{j=0..k} pred[k-j] G_j
                n_cols = <int>(k + 1)
                dgemv(&trans, &n_rows, &n_cols, &one, &Gf[0, 0], &n_rows,
                      &rpred[M - k - 1], &inc, &zero, &prdf[0], &inc)
            for i in range(nxi):
                if not alive[i]:
                    continue
                bnext = beta[i] * tpow[k + 1] if remainder else 0
                if mode == 0:
                    val = hist[i] + diag * _g(c0[i], c1[i], c2[i], prd[i])
                    for it in range(n_iter - 1):
                        val = hist[i] + diag * _g(c0[i], c1[i], c2[i], val)
                else:
                    if mode == 1:
                        if not switched[i] and _cabs(u[k, i]) > switch_c * xi_abs[i]:
                            switched[i] = 1
                        if switched[i]:
                            seed = G[k, i]
                        else:
                            seed = _g(c0[i], c1[i], c2[i], beta[i] * tpow[k + 1])
                    else:
                        seed = G[k, i]
                    val = hist[i] + diag * seed
                    for it in range(n_iter):
                        val = hist[i] + diag * _g(c0[i], c1[i], c2[i], bnext + val)
                h = bnext + val
                if not _finite(h) or _cabs(h) > thr[i]:
                    alive[i] = 0
                    bad_index[i] = k + 1
                    if isfinite(h.real) and h.real < 0:
                        bad_kind[i] = 2
                    else:
                        bad_kind[i] = 1
                    # frozen columns stay zero so they cannot poison the sums
                    continue
                u[k + 1, i] = val
                G[k + 1, i] = _g(c0[i], c1[i], c2[i], h)
        for i in range(nxi):
            if bad_index[i] >= 0:
                for k in range(bad_index[i], M + 1):
                    u[k, i] = NAN + 1j * NAN
    return np.ascontiguousarray(u_arr.T), bad_index_arr, bad_kind_arr

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Same signatures and semantics as ``_kernels_py``.  Reductions run in a fixed
order (no threads) so results are reproducible bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt, fabs

cnp.import_array()


def conv2d(const float[:, :, ::1] x, const float[:, :, :, ::1] w, int stride, int pad):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], cin = x.shape[2]
    cdef Py_ssize_t k = w.shape[0], cout = w.shape[3]
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((Ho, Wo, cout), dtype=np.float32)
    cdef float[:, :, ::1] o = out
    cdef double[::1] acc = np.zeros(cout, dtype=np.float64)
    cdef Py_ssize_t oy, ox, ky, kx, ci, co, iy, ix
    cdef double xv
    for oy in range(Ho):
        for ox in range(Wo):
            for co in range(cout):
                acc[co] = 0.0
            for ky in range(k):
                iy = oy * stride + ky - pad
                if iy < 0 or iy >= H:
                    continue
                for kx in range(k):
                    ix = ox * stride + kx - pad
                    if ix < 0 or ix >= W:
                        continue
                    for ci in range(cin):
                        xv = x[iy, ix, ci]
                        if xv == 0.0:
                            continue
                        for co in range(cout):
                            acc[co] += xv * w[ky, kx, ci, co]
            for co in range(cout):
                o[oy, ox, co] = <float>acc[co]
    return out


def depthwise_conv2d(const float[:, :, ::1] x, const float[:, :, ::1] w, int stride, int pad):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t k = w.shape[0]
    cdef Py_ssize_t Ho = (H + 2 * pad - k) // stride + 1
    cdef Py_ssize_t Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((Ho, Wo, C), dtype=np.float32)
    cdef float[:, :, ::1] o = out
    cdef Py_ssize_t oy, ox, ky, kx, c, iy, ix
    # float32 accumulation in tap order, channel innermost: same rounding as the numpy path
    for oy in range(Ho):
        for ox in range(Wo):
            for ky in range(k):
                iy = oy * stride + ky - pad
                if iy < 0 or iy >= H:
                    continue
                for kx in range(k):
                    ix = ox * stride + kx - pad
                    if ix < 0 or ix >= W:
                        continue
                    for c in range(C):
                        o[oy, ox, c] += x[iy, ix, c] * w[ky, kx, c]
    return out


def max_pool2d(const float[:, :, ::1] x, int s):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t h = H // s, w = W // s
    out = np.empty((h, w, C), dtype=np.float32)
    cdef float[:, :, ::1] o = out
    cdef Py_ssize_t i, j, c, dy, dx
    cdef float* op
    cdef const float* xp
    for i in range(h):
        for j in range(w):
            op = &o[i, j, 0]
            xp = &x[i * s, j * s, 0]
            for c in range(C):
                op[c] = xp[c]
            for dy in range(s):
                for dx in range(s):
                    xp = &x[i * s + dy, j * s + dx, 0]
                    for c in range(C):
                        op[c] = xp[c] if xp[c] > op[c] else op[c]
    return out


def weighted_pool(const float[:, :, ::1] x, const float[:, ::1] cov, int s):
    cdef Py_ssize_t H = x.shape[0], W = x.shape[1], C = x.shape[2]
    cdef Py_ssize_t h = H // s, w = W // s
    out = np.empty((h, w, C), dtype=np.float32)
    cdef float[:, :, ::1] o = out
    cdef double[::1] wts = np.empty(s * s, dtype=np.float64)
    cdef double[::1] acc = np.empty(C, dtype=np.float64)
    cdef Py_ssize_t i, j, c, dy, dx, n
    cdef double m, z, wt
    for i in range(h):
        for j in range(w):
            m = cov[i * s, j * s]
            for dy in range(s):
                for dx in range(s):
                    if cov[i * s + dy, j * s + dx] > m:
                        m = cov[i * s + dy, j * s + dx]
            z = 0.0
            for dy in range(s):
                for dx in range(s):
                    wt = exp(cov[i * s + dy, j * s + dx] - m)
                    wts[dy * s + dx] = wt
                    z += wt
            for c in range(C):
                acc[c] = 0.0
            for dy in range(s):
                for dx in range(s):
                    wt = wts[dy * s + dx] / z
                    for c in range(C):
                        acc[c] += wt * x[i * s + dy, j * s + dx, c]
            for c in range(C):
                o[i, j, c] = <float>acc[c]
    return out


cdef void _argmax_rows_cols(const float[:, ::1] S, Py_ssize_t[::1] row_arg, Py_ssize_t[::1] col_arg) noexcept:
    cdef Py_ssize_t n = S.shape[0], m = S.shape[1], i, j, ra
    cdef float v, rm
    cdef float[::1] cm = np.empty(m, dtype=np.float32)
    for j in range(m):
        col_arg[j] = 0
        cm[j] = S[0, j]
    for i in range(n):
        ra = 0
        rm = S[i, 0]
        for j in range(m):
            v = S[i, j]
            if v > rm:
                rm = v
                ra = j
            if v > cm[j]:
                cm[j] = v
                col_arg[j] = i
        row_arg[i] = ra


def mutual_nn(S_in):
    cdef const float[:, ::1] S = np.ascontiguousarray(S_in, dtype=np.float32)
    cdef Py_ssize_t n = S.shape[0], m = S.shape[1], i
    row = np.empty(n, dtype=np.intp)
    col = np.empty(m, dtype=np.intp)
    mutual = np.empty(n, dtype=bool)
    cdef Py_ssize_t[::1] r = row
    cdef Py_ssize_t[::1] c = col
    _argmax_rows_cols(S, r, c)
    for i in range(n):
        mutual[i] = c[r[i]] == i
    return row, col, mutual


def local_mnn_best(C_in, double min_value):
    cdef const float[:, ::1] C = np.ascontiguousarray(C_in, dtype=np.float32)
    cdef Py_ssize_t n = C.shape[0], m = C.shape[1], i, bi = -1, bj = -1
    cdef Py_ssize_t[::1] r = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] c = np.empty(m, dtype=np.intp)
    cdef float best = 0.0, v
    cdef Py_ssize_t lo, hi, blo = 0, bhi = 0
    _argmax_rows_cols(C, r, c)
    for i in range(n):
        if c[r[i]] != i:
            continue
        v = C[i, r[i]]
        if v <= min_value:
            continue
        # ties: smallest (min(i, j), max(i, j)), invariant under transposition
        lo = i if i < r[i] else r[i]
        hi = r[i] if i < r[i] else i
        if bi < 0 or v > best or (v == best and (lo < blo or (lo == blo and hi < bhi))):
            bi = i
            bj = r[i]
            best = v
            blo = lo
            bhi = hi
    if bi < 0:
        return -1, -1, 0.0
    return int(bi), int(bj), float(best)


def jacobi_eigh(A_in, double tol=1e-12, int max_sweeps=100):
    a_arr = np.array(A_in, dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] a = a_arr
    cdef Py_ssize_t n = a.shape[0], p, q, k
    v_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] v = v_arr
    cdef double frob = 0.0, off, thresh, apq, theta, t, c, s, x1, x2
    cdef int sweeps = 0, sweep
    for p in range(n):
        for q in range(n):
            frob += a[p, q] * a[p, q]
    frob = sqrt(frob)
    thresh = tol * frob if frob > 0 else tol
    for sweep in range(1, max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if sqrt(2.0 * off) <= thresh:
            break
        sweeps = sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x1 = a[k, p]
                    x2 = a[k, q]
                    a[k, p] = c * x1 - s * x2
                    a[k, q] = s * x1 + c * x2
                for k in range(n):
                    x1 = a[p, k]
                    x2 = a[q, k]
                    a[p, k] = c * x1 - s * x2
                    a[q, k] = s * x1 + c * x2
                for k in range(n):
                    x1 = v[k, p]
                    x2 = v[k, q]
                    v[k, p] = c * x1 - s * x2
                    v[k, q] = s * x1 + c * x2
    w = np.diagonal(a_arr).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v_arr[:, order], sweeps

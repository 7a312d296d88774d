"""Numpy implementations of the hot kernels.

These are the fallback used when the compiled ``_kernels`` extension is not
importable (or when ``COMATCH_PURE_PYTHON=1``).  Every function here has a
twin with the same signature in ``_kernels.pyx`` except ``jacobi_eigh_batch``,
which the dispatcher emulates by looping the compiled scalar routine;
``tests/test_tensor.py`` checks that the two agree.

Array conventions: images are float32 ``[H, W, C]`` row-major; padding is
already resolved to an integer by the caller.
"""

import math

import numpy as np


def conv2d(x, w, stride, pad):
    """Dense 2-D convolution (cross-correlation), zero padding.

    ``x`` is ``[H, W, Cin]``, ``w`` is ``[k, k, Cin, Cout]``.
    """
    H, W, cin = x.shape
    k = w.shape[0]
    xp = np.pad(x, ((pad, pad), (pad, pad), (0, 0))) if pad else x
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((Ho, Wo, w.shape[3]), dtype=np.float32)
    for ky in range(k):
        for kx in range(k):
            patch = xp[ky : ky + stride * (Ho - 1) + 1 : stride, kx : kx + stride * (Wo - 1) + 1 : stride]
            out += np.tensordot(patch, w[ky, kx], axes=([2], [0]))
    return out


def depthwise_conv2d(x, w, stride, pad):
    """Per-channel 2-D convolution; ``w`` is ``[k, k, C]``."""
    H, W, C = x.shape
    k = w.shape[0]
    xp = np.pad(x, ((pad, pad), (pad, pad), (0, 0))) if pad else x
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((Ho, Wo, C), dtype=np.float32)
    for ky in range(k):
        for kx in range(k):
            out += xp[ky : ky + stride * (Ho - 1) + 1 : stride, kx : kx + stride * (Wo - 1) + 1 : stride] * w[ky, kx]
    return out


def max_pool2d(x, s):
    H, W, C = x.shape
    return x.reshape(H // s, s, W // s, s, C).max(axis=(1, 3))


def weighted_pool(x, c, s):
    """Covisibility-softmax weighted average over each s x s window.

    ``x`` is ``[H, W, C]`` and ``c`` is ``[H, W]``.
    """
    H, W, C = x.shape
    h, w = H // s, W // s
    cw = c.reshape(h, s, w, s).transpose(0, 2, 1, 3).reshape(h, w, s * s).astype(np.float64)
    cw = np.exp(cw - cw.max(axis=-1, keepdims=True))
    cw /= cw.sum(axis=-1, keepdims=True)
    xw = x.reshape(h, s, w, s, C).transpose(0, 2, 1, 3, 4).reshape(h, w, s * s, C)
    return np.einsum("hwk,hwkc->hwc", cw, xw.astype(np.float64)).astype(np.float32)


def mutual_nn(S):
    """Row/column argmax (first index on ties) and the mutual-max mask per row.

    Returns ``(row_arg, col_arg, mutual)`` where ``mutual[i]`` is true when
    ``col_arg[row_arg[i]] == i``.
    """
    row_arg = np.argmax(S, axis=1)
    col_arg = np.argmax(S, axis=0)
    mutual = col_arg[row_arg] == np.arange(S.shape[0])
    return row_arg, col_arg, mutual


def local_mnn_best(C, min_value):
    """Best mutual-nearest pair of a local correlation matrix.

    Returns ``(i, j, value)``; ``i == -1`` when no mutual pair exceeds
    ``min_value``.  Among mutual pairs the largest value wins; ties go to the
    smallest ``(min(i, j), max(i, j))``, a rule unchanged by transposing ``C``.
    """
    row_arg, _, mutual = mutual_nn(C)
    rows = np.flatnonzero(mutual)
    if rows.size == 0:
        return -1, -1, 0.0
    vals = C[rows, row_arg[rows]]
    keep = vals > min_value
    if not keep.any():
        return -1, -1, 0.0
    rows, vals = rows[keep], vals[keep]
    cols = row_arg[rows]
    top = vals == vals.max()
    rows, cols = rows[top], cols[top]
    b = int(np.lexsort((np.maximum(rows, cols), np.minimum(rows, cols)))[0])
    return int(rows[b]), int(cols[b]), float(vals[top][b])


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvalues sorted
    ascending and eigenvectors as columns.
    """
    a = [list(map(float, row)) for row in np.asarray(A, dtype=np.float64)]
    n = len(a)
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    frob = math.sqrt(sum(a[i][j] ** 2 for i in range(n) for j in range(n)))
    thresh = tol * frob if frob > 0 else tol
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = math.sqrt(2.0 * sum(a[p][q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= thresh:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0.0:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                ap, aq = a[p], a[q]
                for k in range(n):
                    apk, aqk = ap[k], aq[k]
                    ap[k] = c * apk - s * aqk
                    aq[k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    w = np.array([a[i][i] for i in range(n)])
    V = np.array(v)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order], sweeps


def jacobi_eigh_batch(A, tol=1e-12, max_sweeps=100):
    """:func:`jacobi_eigh` over a stack ``[B, n, n]`` of symmetric matrices.

    Each rotation is applied to the whole stack at once; a matrix leaves the
    active set as soon as it converges.  The arithmetic follows the scalar
    routine operation for operation, so each result matches ``jacobi_eigh``
    on that matrix.
    """
    a = np.array(A, dtype=np.float64)
    B, n, _ = a.shape
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    sweeps = np.zeros(B, dtype=np.int64)
    frob = np.zeros(B)
    for i in range(n):
        for j in range(n):
            frob = frob + a[:, i, j] ** 2
    frob = np.sqrt(frob)
    thresh = np.where(frob > 0, tol * frob, tol)
    active = np.arange(B)
    for sweep in range(1, max_sweeps + 1):
        off = np.zeros(len(active))
        sub = a[active]
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = off + sub[:, p, q] ** 2
        active = active[np.sqrt(2.0 * off) > thresh[active]]
        if not len(active):
            break
        sweeps[active] = sweep
        sa, sv = a[active], v[active]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = sa[:, p, q]
                live = apq != 0.0
                if not live.any():
                    continue
                with np.errstate(divide="ignore", invalid="ignore"):
                    theta = (sa[:, q, q] - sa[:, p, p]) / (2.0 * apq)
                    t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                t = np.where(live, t, 0.0)  # c = 1, s = 0 leaves the matrix untouched
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = (t * c)[:, None]
                c = c[:, None]
                x1, x2 = sa[:, :, p].copy(), sa[:, :, q].copy()
                sa[:, :, p] = c * x1 - s * x2
                sa[:, :, q] = s * x1 + c * x2
                x1, x2 = sa[:, p, :].copy(), sa[:, q, :].copy()
                sa[:, p, :] = c * x1 - s * x2
                sa[:, q, :] = s * x1 + c * x2
                x1, x2 = sv[:, :, p].copy(), sv[:, :, q].copy()
                sv[:, :, p] = c * x1 - s * x2
                sv[:, :, q] = s * x1 + c * x2
        a[active], v[active] = sa, sv
    w = np.diagonal(a, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, v, sweeps

"""Brute-force loop references for the vectorized and compiled kernels.

Deliberately naive: explicit Python loops in float64, no shared code with
the implementations they check.
"""

import math

import numpy as np


def conv2d_loop(x, w, stride=1, pad=0):
    H, W, C = x.shape
    k, _, _, O = w.shape
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((Ho, Wo, O))
    for i in range(Ho):
        for j in range(Wo):
            for o in range(O):
                acc = 0.0
                for di in range(k):
                    for dj in range(k):
                        y = i * stride + di - pad
                        xx = j * stride + dj - pad
                        if 0 <= y < H and 0 <= xx < W:
                            for c in range(C):
                                acc += float(x[y, xx, c]) * float(w[di, dj, c, o])
                out[i, j, o] = acc
    return out


def depthwise_loop(x, w, stride=1, pad=0):
    H, W, C = x.shape
    k = w.shape[0]
    Ho = (H + 2 * pad - k) // stride + 1
    Wo = (W + 2 * pad - k) // stride + 1
    out = np.zeros((Ho, Wo, C))
    for i in range(Ho):
        for j in range(Wo):
            for c in range(C):
                acc = 0.0
                for di in range(k):
                    for dj in range(k):
                        y = i * stride + di - pad
                        xx = j * stride + dj - pad
                        if 0 <= y < H and 0 <= xx < W:
                            acc += float(x[y, xx, c]) * float(w[di, dj, c])
                out[i, j, c] = acc
    return out


def max_pool_loop(x, s):
    H, W, C = x.shape
    out = np.zeros((H // s, W // s, C))
    for i in range(H // s):
        for j in range(W // s):
            for c in range(C):
                out[i, j, c] = max(float(x[i * s + a, j * s + b, c]) for a in range(s) for b in range(s))
    return out


def weighted_pool_loop(x, c, s):
    H, W, C = x.shape
    out = np.zeros((H // s, W // s, C))
    for i in range(H // s):
        for j in range(W // s):
            cells = [(i * s + a, j * s + b) for a in range(s) for b in range(s)]
            m = max(float(c[p]) for p in cells)
            wts = [math.exp(float(c[p]) - m) for p in cells]
            z = sum(wts)
            for ch in range(C):
                out[i, j, ch] = sum(wt * float(x[p][ch]) for wt, p in zip(wts, cells)) / z
    return out


def softmax_row(v):
    m = max(v)
    e = [math.exp(a - m) for a in v]
    z = sum(e)
    return [a / z for a in e]


def attention_loop(Q, K, V, covis=None):
    n, dh = Q.shape
    m = K.shape[0]
    out = np.zeros((n, V.shape[1]))
    for i in range(n):
        logits = [sum(float(Q[i, a]) * float(K[j, a]) for a in range(dh)) / math.sqrt(dh) for j in range(m)]
        p = softmax_row(logits)
        for j in range(m):
            scale = 1.0 if covis is None else float(covis[j])
            out[i] += p[j] * scale * V[j].astype(np.float64)
    return out


def dual_softmax_loop(C):
    n, m = C.shape
    rows = [softmax_row([float(C[i, j]) for j in range(m)]) for i in range(n)]
    cols = [softmax_row([float(C[i, j]) for i in range(n)]) for j in range(m)]
    return np.array([[rows[i][j] * cols[j][i] for j in range(m)] for i in range(n)])


def mnn_loop(S, theta=0.0):
    """All (i, j) that are the first maximum of their row and column, with S >= theta."""
    n, m = S.shape
    out = []
    for i in range(n):
        for j in range(m):
            row_first = min(k for k in range(m) if S[i, k] == max(S[i]))
            col_first = min(k for k in range(n) if S[k, j] == max(S[:, j]))
            if row_first == j and col_first == i and S[i, j] >= theta:
                out.append((i, j))
    return out

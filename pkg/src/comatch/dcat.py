"""Covisibility-aware transformer over the coarse (1/8) token grids.

Each block predicts per-token covisibility, condenses the grid by ``s`` per
axis (covisibility-weighted depthwise conv for queries, covisibility-softmax
pooling for keys/values), runs self-attention with 2-D rotary encoding and
cross-attention whose value rows are scaled by the source view's pooled
covisibility, then upsamples the message and fuses it back into the grid.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ShapeError
from .tensor import (
    as_tensor,
    bilinear_resize,
    conv2d,
    layer_norm,
    linear,
    max_pool2d,
    relu,
    sigmoid,
    softmax,
)


@dataclass(frozen=True)
class CovisibilityMap:
    scores: np.ndarray  # [h, w], values in [0, 1]
    layer: int
    view: str


@dataclass
class DcatParams:
    d: int = 256
    heads: int = 8
    L: int = 4
    s: int = 4
    fusion: str = "mlp"  # "mlp" or "add"
    basis: np.ndarray = None  # [d_head / 2, 2] RoPE frequencies
    layers: list = field(default_factory=list)  # one dict of arrays per block


def _dense(rng, fan_in, fan_out):
    return (rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)).astype(np.float32)


def init_dcat(seed, d=256, heads=8, L=4, s=4, fusion="mlp"):
    if d % heads or (d // heads) % 4:
        raise ShapeError(f"init_dcat: d={d} must split into heads of a multiple-of-4 width")
    rng = np.random.default_rng(seed)
    layers = []
    for ell in range(1, L + 1):
        p = {}
        if ell >= 2:
            p["covis.w1"] = _dense(rng, d, d // 2)
            p["covis.b1"] = np.zeros(d // 2, np.float32)
            p["covis.w2"] = _dense(rng, d // 2, 1)
            p["covis.b2"] = np.zeros(1, np.float32)
        p["cond.w"] = (1.0 / s**2 + rng.standard_normal((s, s, d)) * (0.5 / s**2)).astype(np.float32)
        for kind in ("self", "cross"):
            for m in ("wq", "wk", "wv", "wo"):
                p[f"{kind}.{m}"] = _dense(rng, d, d)
        p["fuse.w1"] = _dense(rng, 2 * d, d)
        p["fuse.b1"] = np.zeros(d, np.float32)
        p["fuse.w2"] = _dense(rng, d, d)
        p["fuse.b2"] = np.zeros(d, np.float32)
        p["fuse.gain"] = np.ones(d, np.float32)
        p["fuse.bias"] = np.zeros(d, np.float32)
        layers.append(p)
    return DcatParams(d=d, heads=heads, L=L, s=s, fusion=fusion, basis=rope_basis(d // heads), layers=layers)


# -- covisibility and condensing ------------------------------------------------


def predict_covisibility(features, mlp, layer, view="A"):
    """Per-token covisibility score; the first block uses all ones by convention."""
    features = as_tensor(features, 3, "features")
    h, w, _ = features.shape
    if layer < 1:
        raise ValueError(f"layer index starts at 1, got {layer}")
    if layer == 1:
        return CovisibilityMap(np.ones((h, w), np.float32), layer, view)
    hid = relu(linear(features, mlp["covis.w1"], mlp["covis.b1"]))
    logit = linear(hid, mlp["covis.w2"], mlp["covis.b2"])[..., 0]
    return CovisibilityMap(sigmoid(logit).astype(np.float32), layer, view)


def _scores(covis):
    return covis.scores if isinstance(covis, CovisibilityMap) else as_tensor(covis)


def condense_query(features, covis, kernel, bias=None):
    """Depthwise ``s x s`` stride-``s`` conv of ``features * covis``."""
    features = as_tensor(features, 3, "features")
    c = _scores(covis)
    if c.shape != features.shape[:2]:
        raise ShapeError(f"condense_query: covisibility {c.shape} vs features {features.shape[:2]}")
    s = kernel.shape[0]
    if features.shape[0] % s or features.shape[1] % s:
        raise ShapeError(f"condense_query: {features.shape[:2]} not divisible by {s}")
    return conv2d(features * c[:, :, None], kernel, stride=s, padding="valid", depthwise=True, bias=bias)


def condense_key_value(features, covis, s):
    """Average over each ``s x s`` window weighted by the softmax of its covisibility."""
    features = as_tensor(features, 3, "features")
    c = _scores(covis)
    H, W, _ = features.shape
    if c.shape != (H, W):
        raise ShapeError(f"condense_key_value: covisibility {c.shape} vs features {(H, W)}")
    if H % s or W % s:
        raise ShapeError(f"condense_key_value: {H}x{W} not divisible by {s}")
    return kernels.weighted_pool(features, c, s)


def baseline_condense(features_i, features_j, kernel, s):
    """Plain condensing: depthwise strided conv for queries, max pooling for keys/values."""
    q = conv2d(as_tensor(features_i, 3), kernel, stride=s, padding="valid", depthwise=True)
    return q, max_pool2d(features_j, s)


def aggregate_covisibility(covis, s):
    c = _scores(covis)
    return max_pool2d(c[:, :, None], s)[:, :, 0]


# -- attention ------------------------------------------------------------------


def vanilla_attention(Q, K, V):
    """``softmax(Q K^T / sqrt(dh)) V`` for ``Q [n, dh]``, ``K, V [m, dh]``."""
    Q, K, V = np.asarray(Q), np.asarray(K), np.asarray(V)
    if Q.shape[-1] != K.shape[-1] or K.shape[-2] != V.shape[-2]:
        raise ShapeError(f"attention: Q {Q.shape}, K {K.shape}, V {V.shape} are incompatible")
    A = softmax(Q @ np.swapaxes(K, -1, -2) / np.sqrt(Q.shape[-1]), axis=-1)
    return A @ V


def covis_attention(Q, K, V, reduced_covis):
    """Attention with value row ``j`` scaled by ``reduced_covis[j]``.

    The attention weights are not renormalized after the scaling.
    """
    c = np.asarray(reduced_covis, dtype=np.float32).reshape(-1)
    V = np.asarray(V)
    if c.shape[0] != V.shape[-2]:
        raise ShapeError(f"covis_attention: {c.shape[0]} covisibility scores for {V.shape[-2]} keys")
    return vanilla_attention(Q, K, V * c[:, None])


# -- rotary position encoding -----------------------------------------------------


def rope_basis(dim, base=10000.0):
    """Frequencies ``b_k`` in R^2 for ``dim / 2`` rotation planes.

    The first half of the planes rotate with x, the second half with y, each
    half using the geometric progression ``base ** (-i / n)``.
    """
    if dim % 4:
        raise ShapeError(f"rope_basis: dim must be a multiple of 4, got {dim}")
    n = dim // 4
    freqs = base ** (-np.arange(n) / n)
    basis = np.zeros((dim // 2, 2))
    basis[:n, 0] = freqs
    basis[n:, 1] = freqs
    return basis


def rotate(features, positions, basis):
    """Apply ``R(x)`` to each row: plane ``k`` (dims 2k, 2k+1) turns by ``b_k . x``."""
    f = np.asarray(features)
    if f.shape[-1] % 2:
        raise ShapeError(f"rotate: feature dim must be even, got {f.shape[-1]}")
    if f.shape[-1] // 2 != len(basis):
        raise ShapeError(f"rotate: {f.shape[-1] // 2} planes but {len(basis)} basis vectors")
    theta = np.asarray(positions, dtype=np.float64) @ np.asarray(basis).T  # [..., d/2]
    cos, sin = np.cos(theta), np.sin(theta)
    x1, x2 = f[..., 0::2], f[..., 1::2]
    out = np.empty(np.broadcast_shapes(f.shape, theta.shape[:-1] + (f.shape[-1],)), dtype=f.dtype)
    out[..., 0::2] = cos * x1 - sin * x2
    out[..., 1::2] = sin * x1 + cos * x2
    return out


def rope_matrix(x, basis):
    """Explicit block-diagonal ``R(x)``; used by tests as an independent route."""
    dim = 2 * len(basis)
    R = np.zeros((dim, dim))
    for k, b in enumerate(np.asarray(basis)):
        t = float(np.dot(b, x))
        R[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]
    return R


def rope_score(q, k, x_i, x_j, basis):
    """``q^T R(x_j - x_i) k`` computed as ``<R(x_i) q, R(x_j) k>``."""
    return float(np.dot(rotate(q, x_i, basis), rotate(k, x_j, basis)))


def _mha(xq, xkv, p, kind, heads, covis=None, pos_q=None, pos_k=None, basis=None):
    n, d = xq.shape
    m = xkv.shape[0]
    dh = d // heads
    Q = (xq @ p[f"{kind}.wq"]).reshape(n, heads, dh).transpose(1, 0, 2)
    K = (xkv @ p[f"{kind}.wk"]).reshape(m, heads, dh).transpose(1, 0, 2)
    V = (xkv @ p[f"{kind}.wv"]).reshape(m, heads, dh).transpose(1, 0, 2)
    if basis is not None:
        Q = rotate(Q, pos_q, basis).astype(np.float32)
        K = rotate(K, pos_k, basis).astype(np.float32)
    out = vanilla_attention(Q, K, V) if covis is None else covis_attention(Q, K, V, covis)
    return out.transpose(1, 0, 2).reshape(n, d) @ p[f"{kind}.wo"]


def _grid_positions(h, w, s):
    ys, xs = np.mgrid[0:h, 0:w]
    return np.stack([xs * s + (s - 1) / 2.0, ys * s + (s - 1) / 2.0], axis=-1).reshape(-1, 2)


def _condense(F, p, params, layer, view):
    C = predict_covisibility(F, p, layer, view)
    q = condense_query(F, C, p["cond.w"])
    kv = condense_key_value(F, C, params.s)
    c_red = aggregate_covisibility(C, params.s)
    return C, q, kv, c_red


def _fuse(F, up, p, fusion):
    if fusion == "add":
        return (F + up).astype(np.float32)
    hid = relu(linear(np.concatenate([F, up], axis=-1), p["fuse.w1"], p["fuse.b1"]))
    delta = layer_norm(linear(hid, p["fuse.w2"], p["fuse.b2"]), p["fuse.gain"], p["fuse.bias"])
    return (F + delta).astype(np.float32)


def dcat_block(F_A, F_B, params, layer):
    """One transformer block over both views.

    Returns ``(F_A', F_B', C_A, C_B)`` where ``C_*`` are the covisibility maps
    the block used.
    """
    F_A = as_tensor(F_A, 3, "F_A")
    F_B = as_tensor(F_B, 3, "F_B")
    if F_A.shape[2] != F_B.shape[2] or F_A.shape[2] != params.d:
        raise ShapeError(f"dcat_block: channel dims {F_A.shape[2]}, {F_B.shape[2]} vs d={params.d}")
    p = params.layers[layer - 1]
    s = params.s
    views = {}
    for name, F in (("A", F_A), ("B", F_B)):
        views[name] = _condense(F, p, params, layer, name)
    out = {}
    for name, other in (("A", "B"), ("B", "A")):
        F = F_A if name == "A" else F_B
        h, w, d = F.shape
        _, q, kv, c_red = views[name]
        _, _, kv_o, c_red_o = views[other]
        hr, wr = q.shape[:2]
        pos = _grid_positions(hr, wr, s)
        qf, kvf = q.reshape(-1, d), kv.reshape(-1, d)
        a = _mha(qf, kvf, p, "self", params.heads, c_red.reshape(-1), pos, pos, params.basis)
        b = _mha(qf + a, kv_o.reshape(-1, d), p, "cross", params.heads, c_red_o.reshape(-1))
        msg = (a + b).astype(np.float32).reshape(hr, wr, d)
        out[name] = _fuse(F, bilinear_resize(msg, h, w), p, params.fusion)
    return out["A"], out["B"], views["A"][0], views["B"][0]


def run_dcat(F0_A, F0_B, params):
    """Apply ``params.L`` blocks in sequence.

    Returns ``(F_A, F_B, history)``; ``history`` holds ``(C_A, C_B)`` for
    blocks 2..L (block 1 uses the all-ones convention and is not recorded).
    """
    F_A, F_B = as_tensor(F0_A, 3), as_tensor(F0_B, 3)
    history = []
    for layer in range(1, params.L + 1):
        F_A, F_B, C_A, C_B = dcat_block(F_A, F_B, params, layer)
        if layer >= 2:
            history.append((C_A, C_B))
    return F_A, F_B, history

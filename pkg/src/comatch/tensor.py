"""Dense float32 building blocks on ``[H, W, C]`` arrays.

Tensors are plain ``numpy.ndarray`` objects with dtype float32 in row-major
H, W, C layout; the serialized form is the TSR1 format in :mod:`comatch.io`.
"""

import numpy as np

from . import kernels
from .errors import ShapeError

DTYPE = np.float32


def as_tensor(x, ndim=None, name="input"):
    a = np.ascontiguousarray(x, dtype=DTYPE)
    if ndim is not None and a.ndim != ndim:
        raise ShapeError(f"{name}: expected {ndim}-D array, got shape {a.shape}")
    return a


def conv2d(x, kernel, stride=1, padding="same", depthwise=False, bias=None):
    """2-D cross-correlation of an ``[H, W, Cin]`` map.

    Args:
        x: input map ``[H, W, Cin]``.
        kernel: ``[k, k, Cin, Cout]``, or ``[k, k, Cin]`` when ``depthwise``.
        stride: positive step in both axes.
        padding: ``"same"`` (zero fill, odd ``k`` only) or ``"valid"``.
        depthwise: apply one ``k x k`` filter per channel.
        bias: optional ``[Cout]`` added after the convolution.

    Returns:
        ``[Ho, Wo, Cout]`` with ``Ho = (H + 2p - k) // stride + 1``.
    """
    x = as_tensor(x, 3, "conv2d input")
    kernel = as_tensor(kernel)
    if stride < 1:
        raise ShapeError(f"conv2d: stride must be >= 1, got {stride}")
    if depthwise:
        if kernel.ndim != 3 or kernel.shape[2] != x.shape[2]:
            raise ShapeError(f"conv2d: depthwise kernel must be [k, k, {x.shape[2]}], got {kernel.shape}")
    elif kernel.ndim != 4 or kernel.shape[2] != x.shape[2]:
        raise ShapeError(f"conv2d: kernel must be [k, k, {x.shape[2]}, Cout], got {kernel.shape}")
    k = kernel.shape[0]
    if kernel.shape[1] != k:
        raise ShapeError(f"conv2d: kernel must be square, got {kernel.shape[:2]}")
    if padding == "same":
        if k % 2 == 0:
            raise ShapeError(f"conv2d: 'same' padding needs an odd kernel, got k={k}")
        pad = (k - 1) // 2
    elif padding == "valid":
        pad = 0
        if x.shape[0] < k or x.shape[1] < k:
            raise ShapeError(f"conv2d: input {x.shape[:2]} smaller than kernel {k}")
    else:
        raise ShapeError(f"conv2d: unknown padding {padding!r}")
    if depthwise:
        out = kernels.depthwise_conv2d(x, kernel, stride, pad)
    else:
        out = kernels.conv2d(x, kernel, stride, pad)
    if bias is not None:
        out += as_tensor(bias)
    return out


def max_pool2d(x, s):
    """Non-overlapping ``s x s`` max pooling."""
    x = as_tensor(x, 3, "max_pool2d input")
    H, W, _ = x.shape
    if s < 1 or H % s or W % s:
        raise ShapeError(f"max_pool2d: {H}x{W} not divisible by window {s}")
    return kernels.max_pool2d(x, s)


def bilinear_resize(x, out_h, out_w):
    """Bilinear resize with the align-corners-false convention.

    Output pixel ``i`` samples source coordinate ``(i + 0.5) * H / out_h - 0.5``,
    clamped to the valid range.
    """
    x = as_tensor(x, 3, "bilinear_resize input")
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"bilinear_resize: output size must be positive, got {out_h}x{out_w}")
    H, W, _ = x.shape
    if (H, W) == (out_h, out_w):
        return x.copy()
    y0, y1, fy = _axis_weights(H, out_h)
    x0, x1, fx = _axis_weights(W, out_w)
    top = x[y0][:, x0] * (1 - fx)[None, :, None] + x[y0][:, x1] * fx[None, :, None]
    bot = x[y1][:, x0] * (1 - fx)[None, :, None] + x[y1][:, x1] * fx[None, :, None]
    return (top * (1 - fy)[:, None, None] + bot * fy[:, None, None]).astype(DTYPE)


def _axis_weights(n_in, n_out):
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, (src - lo).astype(DTYPE)


def softmax(x, axis=-1):
    x = np.asarray(x)
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def matmul(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    return a @ b


def linear(x, weight, bias=None):
    """``x @ weight + bias`` over the last axis; ``weight`` is ``[in, out]``."""
    y = matmul(x, weight)
    if bias is not None:
        y = y + bias
    return y


def sigmoid(x):
    x = np.asarray(x)
    # split by sign so exp never overflows
    out = np.empty_like(x, dtype=np.result_type(x, np.float32))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x):
    return np.maximum(x, 0)


def layer_norm(x, gain=None, bias=None, eps=1e-5):
    """Normalize the last (channel) axis to zero mean, unit variance, then scale and shift."""
    x = np.asarray(x)
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    y = (x - mu) / np.sqrt(var + eps)
    if gain is not None:
        y = y * gain
    if bias is not None:
        y = y + bias
    return y.astype(x.dtype, copy=False)

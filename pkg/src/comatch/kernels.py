"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy fallback
in ``_kernels_py`` is used.  Setting ``COMATCH_PURE_PYTHON=1`` forces the
fallback.  ``BACKEND`` names the active choice.  Dense convolution and the
full-matrix mutual nearest neighbour always take the numpy route, which beats
the compiled loops there (see ``benchmarks/bench_kernels.py``).
"""

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("COMATCH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def backends():
    """Available implementations keyed by name (for parity tests and benchmarks)."""
    out = {"python": _kernels_py}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def _f32(a):
    return np.ascontiguousarray(a, dtype=np.float32)


def conv2d(x, w, stride, pad):
    # per-tap tensordot rides on BLAS and beats the compiled direct loop for
    # every channel count the backbone uses (see benchmarks/bench_kernels.py)
    return _kernels_py.conv2d(_f32(x), _f32(w), int(stride), int(pad))


def depthwise_conv2d(x, w, stride, pad):
    return _impl.depthwise_conv2d(_f32(x), _f32(w), int(stride), int(pad))


def max_pool2d(x, s):
    return _impl.max_pool2d(_f32(x), int(s))


def weighted_pool(x, c, s):
    return _impl.weighted_pool(_f32(x), _f32(c), int(s))


def mutual_nn(S):
    # numpy's SIMD argmax wins on full correlation matrices
    return _kernels_py.mutual_nn(_f32(S))


def local_mnn_best(C, min_value=0.0):
    return _impl.local_mnn_best(_f32(C), float(min_value))


def jacobi_eigh(A, tol=1e-12, max_sweeps=100):
    return _impl.jacobi_eigh(np.asarray(A, dtype=np.float64), tol, max_sweeps)


def jacobi_eigh_batch(A, tol=1e-12, max_sweeps=100):
    A = np.asarray(A, dtype=np.float64)
    if _impl is _kernels_py:
        return _kernels_py.jacobi_eigh_batch(A, tol, max_sweeps)
    # the compiled scalar routine is already fast; loop it
    out = [_impl.jacobi_eigh(np.ascontiguousarray(m), tol, max_sweeps) for m in A]
    n = A.shape[-1]
    if not out:
        return np.zeros((0, n)), np.zeros((0, n, n)), np.zeros(0, dtype=np.int64)
    w, V, sw = zip(*out)
    return np.stack(w), np.stack(V), np.array(sw, dtype=np.int64)

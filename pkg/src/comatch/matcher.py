"""Coarse matching on the 1/8 grid and two-stage bilateral refinement.

Coarse: tau-scaled cosine correlation, dual-softmax, mutual nearest
neighbours above ``theta_c``.  Fine: a progressive fusion produces
full-resolution features; each coarse match crops one 8x8 cell per view,
stage 1 picks the best mutual pixel pair inside the two cells and stage 2
moves both endpoints by a soft-argmax over their 3x3 neighbourhoods.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .backbone import extract_features
from .dcat import run_dcat, vanilla_attention
from .errors import ShapeError
from .tensor import as_tensor, bilinear_resize, conv2d, relu, softmax

FINE_WIDTH = 64
PATCH = 8  # crop width: one coarse cell at full resolution
PATCH_CENTER = PATCH // 2


@dataclass
class CoarseMatches:
    i: np.ndarray  # flat index into A's 1/8 grid
    j: np.ndarray  # flat index into B's 1/8 grid
    score: np.ndarray

    def __len__(self):
        return len(self.i)

    def pairs(self):
        return [(int(a), int(b)) for a, b in zip(self.i, self.j)]


@dataclass
class FineMatches:
    xA: np.ndarray  # [M, 2] subpixel (x, y)
    xB: np.ndarray
    xA_pix: np.ndarray  # [M, 2] stage-1 integer pixels
    xB_pix: np.ndarray
    score: np.ndarray  # parent coarse score
    parent: np.ndarray  # index into the coarse match arrays
    fallback: np.ndarray  # stage 1 found no mutual pair
    border: np.ndarray  # stage-2 neighbourhood was clamped

    def __len__(self):
        return len(self.xA)


@dataclass
class MatchResult:
    coarse: CoarseMatches
    fine: FineMatches
    covis_history: list
    grid_A: tuple
    grid_B: tuple
    dropped_border: int = 0
    timing: dict = field(default_factory=dict)

    @property
    def empty(self):
        return len(self.coarse) == 0


@dataclass
class OracleFeatures:
    """Injected features that bypass the learned modules (testing and evaluation)."""

    coarse_A: np.ndarray  # [h, w, d]
    coarse_B: np.ndarray
    fine_A: np.ndarray  # [H, W, c]
    fine_B: np.ndarray


# -- coarse -----------------------------------------------------------------------------


def _l2n(x):
    x = np.asarray(x, dtype=np.float32)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    return x / np.maximum(n, 1e-12)


def correlation_matrix(FL_A, FL_B, tau=10.0):
    """``tau * <a_i, b_j>`` for L2-normalized token rows; inputs ``[n, d]`` or ``[h, w, d]``."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    A = np.asarray(FL_A, dtype=np.float32)
    B = np.asarray(FL_B, dtype=np.float32)
    if A.shape[-1] != B.shape[-1]:
        raise ShapeError(f"correlation_matrix: channel dims differ ({A.shape[-1]} vs {B.shape[-1]})")
    A = _l2n(A.reshape(-1, A.shape[-1]))
    B = _l2n(B.reshape(-1, B.shape[-1]))
    return (np.float32(tau) * (A @ B.T)).astype(np.float32)


def dual_softmax(C):
    C = np.asarray(C, dtype=np.float32)
    if not np.all(np.isfinite(C)):
        raise ValueError("dual_softmax: non-finite correlation")
    return (softmax(C, axis=1) * softmax(C, axis=0)).astype(np.float32)


def mnn_filter(S, theta_c=0.1):
    """Mutual row/column maxima with score >= ``theta_c``; ties go to the lowest index."""
    if not 0.0 <= theta_c <= 1.0:
        raise ValueError(f"theta_c must lie in [0, 1], got {theta_c}")
    S = np.asarray(S, dtype=np.float32)
    row_arg, _, mutual = kernels.mutual_nn(S)
    i = np.flatnonzero(mutual)
    j = row_arg[i]
    score = S[i, j]
    keep = score >= theta_c
    return CoarseMatches(i[keep].astype(np.int64), j[keep].astype(np.int64), score[keep])


# -- fine features ------------------------------------------------------------------------


def fine_shapes(d=256):
    return {
        "proj8.w": (1, 1, d, 128),
        "lat4.w": (1, 1, 128, 128),
        "mix4.w": (3, 3, 128, 128),
        "proj4.w": (1, 1, 128, FINE_WIDTH),
        "lat2.w": (1, 1, 64, FINE_WIDTH),
        "mix2.w": (3, 3, FINE_WIDTH, FINE_WIDTH),
        "mix1.w": (3, 3, FINE_WIDTH, FINE_WIDTH),
        "xattn.wq": (FINE_WIDTH, FINE_WIDTH),
        "xattn.wk": (FINE_WIDTH, FINE_WIDTH),
        "xattn.wv": (FINE_WIDTH, FINE_WIDTH),
        "xattn.wo": (FINE_WIDTH, FINE_WIDTH),
    }


def init_fine(seed, d=256):
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in fine_shapes(d).items():
        fan_in = shape[0] if len(shape) == 2 else shape[0] * shape[1] * shape[2]
        params[name] = (rng.standard_normal(shape) * np.sqrt(1.0 / fan_in)).astype(np.float32)
    for name in ("mix4", "mix2", "mix1"):
        params[f"{name}.b"] = np.zeros(params[f"{name}.w"].shape[-1], np.float32)
    return params


def _up2(x):
    return bilinear_resize(x, 2 * x.shape[0], 2 * x.shape[1])


def fuse_fine(FL, f4, f2, params):
    """1/8 -> 1/4 (+f4) -> 1/2 (+f2) -> 1/1, each step upsample, skip-add, conv."""
    FL = as_tensor(FL, 3, "FL")
    f4 = as_tensor(f4, 3, "f4")
    f2 = as_tensor(f2, 3, "f2")
    h, w = FL.shape[:2]
    if f4.shape[:2] != (2 * h, 2 * w) or f2.shape[:2] != (4 * h, 4 * w):
        raise ShapeError(f"fuse_fine: pyramid dims {FL.shape}, {f4.shape}, {f2.shape} are inconsistent")
    x = conv2d(FL, params["proj8.w"])
    x = _up2(x) + conv2d(f4, params["lat4.w"])
    x = relu(conv2d(x, params["mix4.w"], bias=params["mix4.b"]))
    x = conv2d(x, params["proj4.w"])
    x = _up2(x) + conv2d(f2, params["lat2.w"])
    x = relu(conv2d(x, params["mix2.w"], bias=params["mix2.b"]))
    return conv2d(_up2(x), params["mix1.w"], bias=params["mix1.b"])


def cell_origin(flat, grid_w, cell=PATCH):
    """Top-left full-resolution pixel ``(x, y)`` of coarse cell(s) ``flat``."""
    flat = np.asarray(flat, dtype=np.int64)
    return np.stack([(flat % grid_w) * cell, (flat // grid_w) * cell], axis=-1)


def crop_patches(F_hat, flat, grid_w, w=PATCH):
    """``[M, w, w, c]`` patches covering coarse cells ``flat``."""
    F_hat = np.asarray(F_hat)
    o = cell_origin(flat, grid_w, w)
    ys = o[:, 1, None] + np.arange(w)
    xs = o[:, 0, None] + np.arange(w)
    return F_hat[ys[:, :, None], xs[:, None, :]]


def consolidate(PA, PB, params):
    """One bidirectional residual cross-attention between paired patches (batched)."""
    M, w, _, c = PA.shape
    a = PA.reshape(M, w * w, c)
    b = PB.reshape(M, w * w, c)

    def attend(x, y):
        Q, K, V = x @ params["xattn.wq"], y @ params["xattn.wk"], y @ params["xattn.wv"]
        return vanilla_attention(Q, K, V) @ params["xattn.wo"]

    a2 = a + attend(a, b)
    b2 = b + attend(b, a)
    return a2.reshape(PA.shape).astype(np.float32), b2.reshape(PB.shape).astype(np.float32)


def crop_and_consolidate(F_hat_A, F_hat_B, matches, grid_A, grid_B, params=None, w=PATCH):
    """Crop the ``w x w`` cell of every coarse match in both views and consolidate.

    With ``w`` equal to the cell size every patch lies inside the image, so
    nothing is dropped; the returned count is kept for interface stability.
    Passing ``params=None`` skips the attention step.
    """
    PA = crop_patches(F_hat_A, matches.i, grid_A[1], w)
    PB = crop_patches(F_hat_B, matches.j, grid_B[1], w)
    if params is not None and len(matches):
        PA, PB = consolidate(PA, PB, params)
    return PA, PB, 0


# -- refinement -----------------------------------------------------------------------------


def stage1_refine(patchA, patchB):
    """Best mutual pixel pair inside two patches.

    Returns ``((ya, xa), (yb, xb), fallback)`` in patch coordinates.  When the
    raw local correlation has no mutual pair with positive value both ends
    fall back to the patch centre and ``fallback`` is true.
    """
    w = patchA.shape[0]
    if patchA.shape[:2] != (w, w) or patchB.shape[:2] != (w, w):
        raise ShapeError(f"stage1_refine: patches must be square and equal, got {patchA.shape}, {patchB.shape}")
    a = np.asarray(patchA, np.float32).reshape(w * w, -1)
    b = np.asarray(patchB, np.float32).reshape(w * w, -1)
    # symmetrized so that swapping the views yields exactly the transpose
    C = np.float32(0.5) * (a @ b.T + (b @ a.T).T)
    ia, ib, _ = kernels.local_mnn_best(C, 0.0)
    if ia < 0:
        c = w // 2
        return (c, c), (c, c), True
    return divmod(ia, w), divmod(ib, w), False


_OFFS = np.array([-1.0, 0.0, 1.0])


def soft_argmax3x3(scores):
    """Expected ``(dx, dy)`` offset under a softmax over a ``[..., 3, 3]`` score grid."""
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[-2:] != (3, 3):
        raise ShapeError(f"soft_argmax3x3: expected [..., 3, 3], got {s.shape}")
    p = softmax(s.reshape(s.shape[:-2] + (9,)), axis=-1).reshape(s.shape)
    dx = np.sum(p.sum(axis=-2) * _OFFS, axis=-1)
    dy = np.sum(p.sum(axis=-1) * _OFFS, axis=-1)
    return np.stack([dx, dy], axis=-1)


def soft_argmax3x3_jacobian(scores):
    """``d(dx, dy) / d scores`` for a single 3x3 grid; shape ``[2, 3, 3]``."""
    s = np.asarray(scores, dtype=np.float64).reshape(3, 3)
    p = softmax(s.reshape(9)).reshape(3, 3)
    ox = np.broadcast_to(_OFFS, (3, 3))
    oy = ox.T
    e = soft_argmax3x3(s)
    return np.stack([p * (ox - e[0]), p * (oy - e[1])])


def _neighbourhood(F, xy):
    """3x3 features around integer pixels ``xy [M, 2]`` with edge replication."""
    H, W = F.shape[:2]
    xs = xy[:, 0, None] + np.arange(-1, 2)
    ys = xy[:, 1, None] + np.arange(-1, 2)
    clamped = (xs.min(1) < 0) | (xs.max(1) >= W) | (ys.min(1) < 0) | (ys.max(1) >= H)
    xs = np.clip(xs, 0, W - 1)
    ys = np.clip(ys, 0, H - 1)
    return F[ys[:, :, None], xs[:, None, :]], clamped


def stage2_refine(F_hat_A, F_hat_B, xA_pix, xB_pix):
    """Move both endpoints of pixel matches by a soft-argmax of their mean feature.

    ``f = (F_A[xA] + F_B[xB]) / 2`` is correlated (raw dot product) with the
    3x3 neighbourhood of each endpoint.  Returns ``(xA, xB, border)``.
    """
    xA_pix = np.asarray(xA_pix, dtype=np.int64).reshape(-1, 2)
    xB_pix = np.asarray(xB_pix, dtype=np.int64).reshape(-1, 2)
    FA = np.asarray(F_hat_A, dtype=np.float32)
    FB = np.asarray(F_hat_B, dtype=np.float32)
    if len(xA_pix) == 0:
        z = np.zeros((0, 2))
        return z, z.copy(), np.zeros(0, bool)
    PA, cA = _neighbourhood(FA, xA_pix)
    PB, cB = _neighbourhood(FB, xB_pix)
    f = 0.5 * (PA[:, 1, 1] + PB[:, 1, 1])
    sA = np.einsum("myxc,mc->myx", PA, f)
    sB = np.einsum("myxc,mc->myx", PB, f)
    xA = xA_pix + soft_argmax3x3(sA)
    xB = xB_pix + soft_argmax3x3(sB)
    return xA, xB, cA | cB


# -- pipeline -----------------------------------------------------------------------------------


@dataclass
class Model:
    backbone: dict
    dcat: object  # DcatParams
    fine: dict
    tau: float = 10.0


def _check_image(img, name):
    img = as_tensor(img)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim != 2:
        raise ShapeError(f"{name}: expected a single-channel [H, W] image, got shape {img.shape}")
    H, W = img.shape
    if H % 8 or W % 8:
        raise ShapeError(f"{name}: size {H}x{W} is not divisible by 8")
    return img


def match_pipeline(image_A, image_B, model=None, theta_c=0.1, oracle=None, consolidate_patches=True):
    """Full coarse-to-fine matching.

    With ``oracle`` set, its coarse and fine features replace the learned
    backbone, transformer and fusion outputs and patch consolidation is
    skipped; ``model`` may then be ``None``.
    """
    if np.ndim(image_A) != np.ndim(image_B):
        raise ShapeError(f"images differ in channel layout: {np.shape(image_A)} vs {np.shape(image_B)}")
    image_A = _check_image(image_A, "image_A")
    image_B = _check_image(image_B, "image_B")
    timing = {}
    t0 = time.perf_counter()
    history = []
    tau = model.tau if model is not None else 10.0
    if oracle is None:
        if model is None:
            raise ValueError("match_pipeline: need a model or oracle features")
        pa = extract_features(image_A, model.backbone)
        pb = extract_features(image_B, model.backbone)
        timing["backbone"] = time.perf_counter() - t0
        t1 = time.perf_counter()
        FL_A, FL_B, history = run_dcat(pa.f8, pb.f8, model.dcat)
        timing["transformer"] = time.perf_counter() - t1
    else:
        FL_A, FL_B = as_tensor(oracle.coarse_A, 3), as_tensor(oracle.coarse_B, 3)
    grid_A, grid_B = FL_A.shape[:2], FL_B.shape[:2]
    if grid_A != (image_A.shape[0] // 8, image_A.shape[1] // 8) or grid_B != (image_B.shape[0] // 8, image_B.shape[1] // 8):
        raise ShapeError(f"coarse grids {grid_A}, {grid_B} do not match the image sizes")

    t1 = time.perf_counter()
    S = dual_softmax(correlation_matrix(FL_A, FL_B, tau))
    coarse = mnn_filter(S, theta_c)
    timing["coarse_matching"] = time.perf_counter() - t1

    t1 = time.perf_counter()
    if oracle is None:
        FA_hat = fuse_fine(FL_A, pa.f4, pa.f2, model.fine)
        FB_hat = fuse_fine(FL_B, pb.f4, pb.f2, model.fine)
        xparams = model.fine if consolidate_patches else None
    else:
        FA_hat, FB_hat = as_tensor(oracle.fine_A, 3), as_tensor(oracle.fine_B, 3)
        xparams = None
    PA, PB, dropped = crop_and_consolidate(FA_hat, FB_hat, coarse, grid_A, grid_B, xparams)
    M = len(coarse)
    pa_xy = np.zeros((M, 2), np.int64)
    pb_xy = np.zeros((M, 2), np.int64)
    fallback = np.zeros(M, bool)
    oA = cell_origin(coarse.i, grid_A[1])
    oB = cell_origin(coarse.j, grid_B[1])
    for m in range(M):
        (ya, xa), (yb, xb), fallback[m] = stage1_refine(PA[m], PB[m])
        pa_xy[m] = oA[m] + (xa, ya)
        pb_xy[m] = oB[m] + (xb, yb)
    xA, xB, border = stage2_refine(FA_hat, FB_hat, pa_xy, pb_xy)
    timing["refinement"] = time.perf_counter() - t1
    timing["total"] = time.perf_counter() - t0

    fine = FineMatches(xA, xB, pa_xy, pb_xy, coarse.score.copy(), np.arange(M), fallback, border)
    return MatchResult(coarse, fine, history, tuple(grid_A), tuple(grid_B), dropped, timing)


def covisibility_history(image_A, image_B, model):
    """Learned covisibility maps for blocks 2..L (used for visualization in oracle mode too)."""
    pa = extract_features(_check_image(image_A, "image_A"), model.backbone)
    pb = extract_features(_check_image(image_B, "image_B"), model.backbone)
    return run_dcat(pa.f8, pb.f8, model.dcat)[2]

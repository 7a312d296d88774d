"""Training losses and the finite-difference gradient harness.

All losses run in float64.  Only the epipolar fine loss has an analytic
gradient, taken with respect to the match coordinates it supervises.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .geometry import sampson_distance, sampson_gradient
from .tensor import softmax

PROB_FLOOR = 1e-12
BCE_CLIP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 1.0
    beta: float = 0.25
    gamma: float = 0.25

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ValueError(f"loss weights must be non-negative: {self}")


@dataclass
class LossReport:
    L_c: float
    L_f1: float
    L_f2: float
    L_covi: float
    total: float
    L_f2_mean: float = float("nan")
    n_coarse: int = 0
    n_patches: int = 0
    n_fine: int = 0
    n_covis_tokens: int = 0

    def to_dict(self):
        return asdict(self)


def coarse_loss(S, gt):
    """Mean negative log assignment probability at the ground-truth cells."""
    S = np.asarray(S, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.int64).reshape(-1, 2)
    if len(gt) == 0:
        raise ValueError("coarse_loss: empty ground-truth match set")
    i, j = gt[:, 0], gt[:, 1]
    if i.min() < 0 or j.min() < 0 or i.max() >= S.shape[0] or j.max() >= S.shape[1]:
        raise IndexError(f"coarse_loss: ground-truth index outside S of shape {S.shape}")
    return float(-np.mean(np.log(np.maximum(S[i, j], PROB_FLOOR))))


def fine_stage1_loss(local_corr, gt):
    """NLL of the ground-truth pixel pair in each patch's dual-softmax matrix.

    ``local_corr`` is a sequence of ``[w*w, w*w]`` correlation matrices;
    ``gt`` gives one ``(ia, ib)`` flat pair per patch, with ``-1`` marking an
    unsupervised patch.
    """
    gt = np.asarray(gt, dtype=np.int64).reshape(-1, 2)
    if len(gt) != len(local_corr):
        raise ValueError(f"fine_stage1_loss: {len(local_corr)} patches but {len(gt)} labels")
    terms = []
    for C, (ia, ib) in zip(local_corr, gt):
        if ia < 0 or ib < 0:
            continue
        C = np.asarray(C, dtype=np.float64)
        S = softmax(C, axis=1) * softmax(C, axis=0)
        terms.append(-np.log(max(S[ia, ib], PROB_FLOOR)))
    if not terms:
        raise ValueError("fine_stage1_loss: no supervised patches")
    return float(np.mean(terms))


def theta_f(K_A, K_B):
    return 1.5 / (K_A.fx + K_A.fy + K_B.fx + K_B.fy)


def _check_fine(pA, pB):
    pA = np.asarray(pA, dtype=np.float64).reshape(-1, np.shape(pA)[-1])
    pB = np.asarray(pB, dtype=np.float64).reshape(-1, np.shape(pB)[-1])
    if len(pA) == 0:
        raise ValueError("fine_stage2_loss: empty match set")
    if len(pA) != len(pB):
        raise ValueError("fine_stage2_loss: endpoint arrays differ in length")
    return pA, pB


def fine_stage2_terms(pA, pB, E, theta):
    """Per-match contributions: ``d`` when ``sqrt(d) < theta``, else ``theta``."""
    pA, pB = _check_fine(pA, pB)
    d = np.atleast_1d(sampson_distance(pA, pB, E))
    return np.where(np.sqrt(d) < theta, d, theta)


def fine_stage2_loss(pA, pB, E, theta):
    """Clamped epipolar loss summed over matches (normalized coordinates)."""
    return float(np.sum(fine_stage2_terms(pA, pB, E, theta)))


def fine_stage2_loss_grad(pA, pB, E, theta):
    """Loss and its gradient ``[M, 4]`` w.r.t. ``(xA, yA, xB, yB)`` of each match.

    Clamped matches contribute a constant, so their gradient is exactly zero.
    """
    pA, pB = _check_fine(pA, pB)
    d = np.atleast_1d(sampson_distance(pA, pB, E))
    live = np.sqrt(d) < theta
    grad = np.zeros((len(pA), 4))
    if live.any():
        grad[live] = sampson_gradient(pA[live], pB[live], E)
    return float(np.sum(np.where(live, d, theta))), grad


def covisibility_loss(covis_history, gt_labels):
    """Mean binary cross-entropy over all tokens of layers 2..L and both views.

    ``covis_history`` holds ``(C_A, C_B)`` per layer (maps or arrays);
    ``gt_labels`` is ``(labels_A, labels_B)`` shared by every layer, or one
    such pair per layer.
    """
    if len(covis_history) == 0:
        raise ValueError("covisibility_loss: empty covisibility history")
    if len(gt_labels) == 2 and np.ndim(gt_labels[0]) == 2:
        gt_labels = [gt_labels] * len(covis_history)
    if len(gt_labels) != len(covis_history):
        raise ValueError(
            f"covisibility_loss: {len(covis_history)} predicted layers but {len(gt_labels)} label layers"
        )
    total, count = 0.0, 0
    for preds, labels in zip(covis_history, gt_labels):
        for p, y in zip(preds, labels):
            p = np.asarray(getattr(p, "scores", p), dtype=np.float64)
            y = np.asarray(y, dtype=np.float64)
            if p.shape != y.shape:
                raise ValueError(f"covisibility_loss: prediction {p.shape} vs labels {y.shape}")
            p = np.clip(p, BCE_CLIP, 1.0 - BCE_CLIP)
            total += float(-np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))
            count += p.size
    return total / count


def total_loss(L_c, L_f1, L_f2, L_covi, weights=LossWeights(), **counts):
    w = weights
    total = L_c + w.alpha * L_f1 + w.beta * L_f2 + w.gamma * L_covi
    return LossReport(float(L_c), float(L_f1), float(L_f2), float(L_covi), float(total), **counts)


def finite_diff_check(f, grad, x, h=1e-4):
    """Max relative error between ``grad(x)`` and central differences of ``f``.

    Relative error is ``max|a - n| / max(max|a|, max|n|, 1e-12)``.
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(grad(x), dtype=np.float64).reshape(x.shape)
    n = np.zeros_like(x)
    flat = x.reshape(-1)
    nf = n.reshape(-1)
    for k in range(flat.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[k] += h
        xm[k] -= h
        nf[k] = (f(xp.reshape(x.shape)) - f(xm.reshape(x.shape))) / (2.0 * h)
    scale = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0), 1e-12)
    return float(np.abs(a - n).max(initial=0.0) / scale)

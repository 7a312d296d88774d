"""Per-scene evaluation protocols shared by the CLI and the acceptance tests."""

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import DegenerateGeometryError

WORST_POSE_ERROR = 180.0


def reliable(fine, min_keep=8):
    """Mask of fine matches whose refinement was not clamped at the border or a stage-1 fallback.

    Falls back to all matches when fewer than ``min_keep`` would remain.
    """
    keep = ~(fine.border | fine.fallback)
    if keep.sum() < min_keep:
        keep = np.ones(len(fine), bool)
    return keep


@dataclass
class PoseOutcome:
    error: float
    err_R: float
    err_t: float
    n_matches: int
    n_inliers: int
    ok: bool
    reason: str = ""


def pose_for_matches(xA, xB, K_A, K_B, gt_pose, iters=1000, thresh_px=0.5, seed=0):
    """RANSAC + decomposition; failures score the worst-case error."""
    n = len(xA)
    if n < 8:
        return PoseOutcome(WORST_POSE_ERROR, WORST_POSE_ERROR, WORST_POSE_ERROR, n, 0, False, "fewer than 8 matches")
    res = geo.estimate_essential_ransac(xA, xB, K_A, K_B, iters=iters, inlier_thresh_px=thresh_px, seed=seed)
    if not res.ok:
        return PoseOutcome(WORST_POSE_ERROR, WORST_POSE_ERROR, WORST_POSE_ERROR, n, 0, False, "ransac failed")
    inl = res.inliers
    try:
        est, _ = geo.decompose_essential(res.model, K_A.normalize(xA[inl]), K_B.normalize(xB[inl]))
    except DegenerateGeometryError as exc:
        return PoseOutcome(WORST_POSE_ERROR, WORST_POSE_ERROR, WORST_POSE_ERROR, n, int(inl.sum()), False, str(exc))
    eR, et = geo.pose_error_components(est, gt_pose)
    return PoseOutcome(max(eR, et), eR, et, n, int(inl.sum()), True)


def pose_for_result(scene, result, iters=1000, thresh_px=0.5, seed=0):
    keep = reliable(result.fine)
    return pose_for_matches(
        result.fine.xA[keep], result.fine.xB[keep], scene.K_A, scene.K_B, scene.pose, iters, thresh_px, seed
    )


def homography_for_result(scene, result, iters=1000, thresh_px=1.0, seed=0):
    """Corner error (px) of a RANSAC homography fitted to the fine matches; ``inf`` on failure."""
    keep = reliable(result.fine, 4)
    xA, xB = result.fine.xA[keep], result.fine.xB[keep]
    if len(xA) < 4:
        return float("inf")
    res = geo.estimate_homography_ransac(xA, xB, iters=iters, inlier_thresh_px=thresh_px, seed=seed)
    if not res.ok:
        return float("inf")
    H, W = scene.shape
    try:
        return geo.corner_error(res.model, scene.homography, W, H)
    except DegenerateGeometryError:
        return float("inf")


def epipolar_or_transfer_error(scene, xA, xB):
    """Per-match error in px: symmetric epipolar distance, or homography transfer error when t = 0.

    With no baseline the essential matrix vanishes, so the rotation
    homography ``K_B R K_A^-1`` is used instead.
    """
    if len(xA) == 0:
        return np.zeros(0)
    if np.linalg.norm(scene.pose.t) < 1e-12:
        H = scene.K_B.K @ scene.pose.R @ scene.K_A.K_inv
        return np.hypot(*(geo.apply_homography(H, xA) - xB).T)
    E = geo.essential_from_pose(scene.pose)
    return geo.symmetric_epipolar_error(xA, xB, scene.K_A, scene.K_B, E)

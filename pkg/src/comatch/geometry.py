"""Two-view geometry for supervision and evaluation.

Conventions: pixel coordinates have their origin at the centre of the
top-left pixel; the relative pose maps camera-A coordinates to camera-B
coordinates, ``X_B = R X_A + t``; the essential matrix satisfies
``p_B^T E p_A = 0`` for normalized homogeneous points.  Everything here runs
in float64.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .linalg import eigh_batch, null_vector, svd3, svd3_from_eigh


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    @property
    def K(self):
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def K_inv(self):
        return np.array(
            [[1 / self.fx, 0.0, -self.cx / self.fx], [0.0, 1 / self.fy, -self.cy / self.fy], [0.0, 0.0, 1.0]]
        )

    def normalize(self, xy):
        xy = np.asarray(xy, dtype=np.float64)
        return np.stack([(xy[..., 0] - self.cx) / self.fx, (xy[..., 1] - self.cy) / self.fy], axis=-1)

    def denormalize(self, xy):
        xy = np.asarray(xy, dtype=np.float64)
        return np.stack([xy[..., 0] * self.fx + self.cx, xy[..., 1] * self.fy + self.cy], axis=-1)

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]))


@dataclass(frozen=True)
class RelativePose:
    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-6 or abs(np.linalg.det(R) - 1.0) > 1e-6:
            raise ValueError("R is not a rotation matrix")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def inverse(self):
        return RelativePose(self.R.T, -self.R.T @ self.t)


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def rotation_about(axis, degrees):
    """Rodrigues rotation matrix."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    a = math.radians(degrees)
    Kx = skew(axis)
    return np.eye(3) + math.sin(a) * Kx + (1 - math.cos(a)) * Kx @ Kx


def essential_from_pose(pose):
    """``E = [t]_x R``."""
    return skew(pose.t) @ pose.R


def fundamental_from_essential(E, K_A, K_B):
    return K_B.K_inv.T @ E @ K_A.K_inv


def _homog(p):
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] == 2:
        p = np.concatenate([p, np.ones(p.shape[:-1] + (1,))], axis=-1)
    return p


def _sampson_terms(pA, pB, E):
    pA, pB = _homog(pA), _homog(pB)
    Ep = pA @ E.T  # E pA
    Etq = pB @ E  # E^T pB
    num = np.sum(pB * Ep, axis=-1)
    den = Ep[..., 0] ** 2 + Ep[..., 1] ** 2 + Etq[..., 0] ** 2 + Etq[..., 1] ** 2
    return num, den, Ep, Etq


def sampson_distance(pA, pB, E):
    """First-order epipolar error of normalized points under ``E``.

    ``pA``/``pB`` are ``(..., 2)`` or ``(..., 3)`` with z = 1.  Where both
    epipolar line vectors vanish the result is ``inf``.
    """
    E = np.asarray(E, dtype=np.float64)
    num, den = _sampson_terms(pA, pB, E)[:2]
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(den > 0, num**2 / np.where(den > 0, den, 1.0), np.inf)
    return d if d.ndim else float(d)


def sampson_gradient(pA, pB, E):
    """Gradient of :func:`sampson_distance` w.r.t. ``(xA, yA, xB, yB)``; shape ``(..., 4)``."""
    E = np.asarray(E, dtype=np.float64)
    num, den, Ep, Etq = _sampson_terms(pA, pB, E)
    if np.any(den <= 0):
        raise DegenerateGeometryError("sampson_gradient: zero denominator")
    dnum = np.stack([Etq[..., 0], Etq[..., 1], Ep[..., 0], Ep[..., 1]], axis=-1)
    dden = 2.0 * np.stack(
        [
            Ep[..., 0] * E[0, 0] + Ep[..., 1] * E[1, 0],
            Ep[..., 0] * E[0, 1] + Ep[..., 1] * E[1, 1],
            Etq[..., 0] * E[0, 0] + Etq[..., 1] * E[0, 1],
            Etq[..., 0] * E[1, 0] + Etq[..., 1] * E[1, 1],
        ],
        axis=-1,
    )
    num, den = num[..., None], den[..., None]
    return (2.0 * num * dnum * den - num**2 * dden) / den**2


def symmetric_epipolar_error(xA, xB, K_A, K_B, E):
    """Mean of the point-to-epipolar-line distances in both images, in pixels."""
    F = fundamental_from_essential(E, K_A, K_B)
    a, b = _homog(xA), _homog(xB)
    lB = a @ F.T
    lA = b @ F
    r = np.sum(b * lB, axis=-1)
    dB = np.abs(r) / np.hypot(lB[..., 0], lB[..., 1])
    dA = np.abs(r) / np.hypot(lA[..., 0], lA[..., 1])
    return 0.5 * (dA + dB)


# -- warping and ground truth -------------------------------------------------------


def backproject(xy, depth, K):
    n = K.normalize(xy)
    z = np.asarray(depth, dtype=np.float64)
    return np.stack([n[..., 0] * z, n[..., 1] * z, z], axis=-1)


def project(X, K):
    X = np.asarray(X, dtype=np.float64)
    z = X[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        n = X[..., :2] / z[..., None]
    return K.denormalize(n), z


def warp_point(x, depth_a, K_A, K_B, pose):
    """Warp pixel(s) of A with known depth into B.

    Returns ``(x_b, z_b, valid)``; ``valid`` is false for non-positive input
    depth or a point landing behind camera B.
    """
    X = backproject(x, depth_a, K_A)
    XB = X @ pose.R.T + pose.t
    xb, zb = project(XB, K_B)
    valid = (np.asarray(depth_a) > 0) & (zb > 0)
    return xb, zb, valid


def sample_nearest(img, xy):
    """Nearest-pixel lookup; 0 outside the image."""
    img = np.asarray(img)
    H, W = img.shape[:2]
    xy = np.asarray(xy, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        ix = np.floor(xy[..., 0] + 0.5)
        iy = np.floor(xy[..., 1] + 0.5)
    inside = (ix >= 0) & (ix < W) & (iy >= 0) & (iy < H)
    out = np.zeros(xy.shape[:-1], dtype=img.dtype)
    out[inside] = img[iy[inside].astype(np.intp), ix[inside].astype(np.intp)]
    return out


def in_image(xy, shape):
    H, W = shape[:2]
    xy = np.asarray(xy)
    return (xy[..., 0] >= -0.5) & (xy[..., 0] < W - 0.5) & (xy[..., 1] >= -0.5) & (xy[..., 1] < H - 0.5)


def grid_centers(h, w, cell=8):
    """Pixel coordinates of coarse cell centres, row-major ``[h * w, 2]`` (x, y)."""
    ys, xs = np.mgrid[0:h, 0:w]
    c = (cell - 1) / 2.0
    return np.stack([xs * cell + c, ys * cell + c], axis=-1).reshape(-1, 2).astype(np.float64)


def covisibility_labels(points, depth_a, depth_b, K_A, K_B, pose, rel_tol=0.2):
    """1 where a point of A lands inside B with consistent depth, else 0.

    ``depth_a`` may be a depth map (sampled at the nearest pixel) or an array
    of per-point depths.  Consistency: ``|z_proj - depth_b(x')| / depth_b(x') <= rel_tol``.
    """
    points = np.asarray(points, dtype=np.float64)
    da = np.asarray(depth_a, dtype=np.float64)
    if da.shape != points.shape[:-1]:
        da = sample_nearest(da, points).astype(np.float64)
    xb, zb, valid = warp_point(points, da, K_A, K_B, pose)
    inside = valid & in_image(xb, np.shape(depth_b))
    db = np.zeros_like(zb)
    db[inside] = sample_nearest(depth_b, xb[inside])
    ok = inside & (db > 0)
    rel = np.full_like(zb, np.inf)
    rel[ok] = np.abs(zb[ok] - db[ok]) / db[ok]
    return (ok & (rel <= rel_tol)).astype(np.uint8)


def gt_coarse_matches(depth_a, depth_b, K_A, K_B, pose, grid_shape, cell=8, rel_tol=0.2, depth_values=None):
    """Ground-truth coarse correspondences as flat-index pairs ``[M, 2]``.

    Every covisible cell centre of A is warped into B and assigned to the
    nearest cell of B.  Collisions keep the A cell whose warped centre is
    closest to the B cell centre (lowest A index on exact ties).
    """
    h, w = grid_shape
    pts = grid_centers(h, w, cell)
    da = depth_values if depth_values is not None else depth_a
    labels = covisibility_labels(pts, da, depth_b, K_A, K_B, pose, rel_tol).astype(bool)
    if depth_values is None:
        depth_values = sample_nearest(depth_a, pts)
    xb, _, _ = warp_point(pts, depth_values, K_A, K_B, pose)
    hb, wb = np.shape(depth_b)[0] // cell, np.shape(depth_b)[1] // cell
    col = np.floor((xb[:, 0] + 0.5) / cell).astype(np.int64)
    row = np.floor((xb[:, 1] + 0.5) / cell).astype(np.int64)
    ok = labels & (col >= 0) & (col < wb) & (row >= 0) & (row < hb)
    centres_b = grid_centers(hb, wb, cell)
    best = {}
    for i in np.flatnonzero(ok):
        j = int(row[i] * wb + col[i])
        dist = float(np.hypot(*(xb[i] - centres_b[j])))
        if j not in best or dist < best[j][0]:
            best[j] = (dist, int(i))
    pairs = sorted((i, j) for j, (_, i) in best.items())
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


# -- estimation ---------------------------------------------------------------------


def _hartley(p):
    c = p.mean(axis=0)
    md = np.mean(np.hypot(p[:, 0] - c[0], p[:, 1] - c[1]))
    s = math.sqrt(2.0) / md if md > 0 else 1.0
    T = np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])
    return (p - c) * s, T


DEGENERATE_RATIO = 1e-12


def eight_point(pA, pB):
    """Normalized 8-point essential matrix from ``N >= 8`` normalized correspondences.

    Returns ``None`` when the linear system has a null space of dimension
    above one (collinear or otherwise degenerate points).  The result is
    projected to singular values ``(1, 1, 0)`` / sqrt(2) (unit Frobenius norm).
    """
    pA = np.asarray(pA, dtype=np.float64)[:, :2]
    pB = np.asarray(pB, dtype=np.float64)[:, :2]
    return eight_point_batch(pA[None], pB[None])[0]


def _hartley_batch(p):
    c = p.mean(axis=1)
    d = p - c[:, None, :]
    md = np.mean(np.hypot(d[..., 0], d[..., 1]), axis=1)
    with np.errstate(divide="ignore"):
        s = np.where(md > 0, math.sqrt(2.0) / md, 1.0)
    T = np.zeros((len(p), 3, 3))
    T[:, 0, 0] = T[:, 1, 1] = s
    T[:, 0, 2] = -s * c[:, 0]
    T[:, 1, 2] = -s * c[:, 1]
    T[:, 2, 2] = 1.0
    return d * s[:, None, None], T


def eight_point_batch(pA, pB):
    """:func:`eight_point` on a stack of samples ``[B, N, 2]``; returns a list of ``B`` results."""
    pA = np.asarray(pA, dtype=np.float64)[..., :2]
    pB = np.asarray(pB, dtype=np.float64)[..., :2]
    qA, TA = _hartley_batch(pA)
    qB, TB = _hartley_batch(pB)
    xa, ya, xb, yb = qA[..., 0], qA[..., 1], qB[..., 0], qB[..., 1]
    A = np.stack([xb * xa, xb * ya, xb, yb * xa, yb * ya, yb, xa, ya, np.ones_like(xa)], axis=-1)
    w, V = eigh_batch(np.matmul(A.transpose(0, 2, 1), A))
    ok = (w[:, -1] > 0) & (w[:, 1] > DEGENERATE_RATIO * w[:, -1])
    out = [None] * len(A)
    keep = np.flatnonzero(ok)
    if not len(keep):
        return out
    E = np.matmul(np.matmul(TB[keep].transpose(0, 2, 1), V[keep, :, 0].reshape(-1, 3, 3)), TA[keep])
    we, Ve = eigh_batch(np.matmul(E.transpose(0, 2, 1), E))
    for k, b in enumerate(keep):
        U, _, Vt = svd3_from_eigh(E[k], we[k], Ve[k])
        Ep = U @ np.diag([1.0, 1.0, 0.0]) @ Vt
        out[b] = Ep / np.linalg.norm(Ep)
    return out


@dataclass
class RansacResult:
    model: np.ndarray  # None when estimation failed
    inliers: np.ndarray
    ok: bool
    iterations: int


def _adaptive_iters(n_inl, n, sample, confidence, cap):
    ratio = n_inl / n
    if ratio >= 1.0:
        return 1
    denom = math.log(max(1e-300, 1.0 - ratio**sample))
    if denom == 0.0:
        return cap
    return min(cap, max(1, int(math.ceil(math.log(1.0 - confidence) / denom))))


def _ransac(n, sample, fit, residual, thresh, iters, seed, confidence, fit_batch=None, chunk=32):
    rng = np.random.default_rng(seed)
    best_model, best_inl, best_count = None, np.zeros(n, bool), -1
    limit, it = iters, 0
    while it < limit:
        # draw a chunk of samples and fit them together; samples drawn past
        # the (shrinking) limit are discarded, so the outcome is the same as
        # fitting one sample per iteration
        idx = np.stack([rng.choice(n, sample, replace=False) for _ in range(min(chunk, limit - it))])
        models = fit_batch(idx) if fit_batch is not None else [fit(i) for i in idx]
        for model in models:
            it += 1
            if model is not None:
                inl = residual(model) < thresh
                count = int(inl.sum())
                if count > best_count:
                    best_model, best_inl, best_count = model, inl, count
                    limit = _adaptive_iters(count, n, sample, confidence, iters)
            if it >= limit:
                break
    if best_model is None or best_count < sample:
        return RansacResult(None, np.zeros(n, bool), False, it)
    # least-squares refit on the consensus set while it does not shrink
    for _ in range(3):
        refit = fit(np.flatnonzero(best_inl))
        if refit is None:
            break
        inl = residual(refit) < thresh
        if inl.sum() < best_count:
            break
        grew = inl.sum() > best_count or not np.array_equal(inl, best_inl)
        best_model, best_inl, best_count = refit, inl, int(inl.sum())
        if not grew:
            break
    return RansacResult(best_model, best_inl, True, it)


def estimate_essential_ransac(xA, xB, K_A, K_B, iters=1000, inlier_thresh_px=0.5, seed=0, confidence=0.99999):
    """RANSAC over 8-point samples with Sampson-distance scoring.

    The pixel threshold is converted to normalized units with the mean focal
    length of both cameras and compared against the (squared-distance)
    Sampson error.  Deterministic for a given seed.
    """
    xA = np.asarray(xA, dtype=np.float64)
    xB = np.asarray(xB, dtype=np.float64)
    n = len(xA)
    if n < 8 or len(xB) != n:
        raise ValueError(f"estimate_essential_ransac: need >= 8 matches, got {n}")
    pA, pB = K_A.normalize(xA), K_B.normalize(xB)
    f_mean = (K_A.fx + K_A.fy + K_B.fx + K_B.fy) / 4.0
    thresh = (inlier_thresh_px / f_mean) ** 2
    return _ransac(
        n,
        8,
        lambda idx: eight_point(pA[idx], pB[idx]),
        lambda E: sampson_distance(pA, pB, E),
        thresh,
        iters,
        seed,
        confidence,
        fit_batch=lambda idx: eight_point_batch(pA[idx], pB[idx]),
    )


def triangulate_depths(pA, pB, R, t):
    """Depths ``(zA, zB)`` minimizing ``|zB pB - zA R pA - t|`` per correspondence."""
    a = _homog(pA) @ R.T
    b = -_homog(pB)
    aa = np.sum(a * a, axis=-1)
    ab = np.sum(a * b, axis=-1)
    bb = np.sum(b * b, axis=-1)
    ra = -a @ t
    rb = -b @ t
    det = aa * bb - ab * ab
    with np.errstate(divide="ignore", invalid="ignore"):
        zA = (bb * ra - ab * rb) / det
        zB = (aa * rb - ab * ra) / det
    return zA, zB


def decompose_essential(E, pA, pB):
    """Pick the (R, t) among the four decompositions of ``E`` with most points in front of both cameras.

    Returns ``(pose, votes)`` with unit-norm ``t``.  Raises
    :class:`DegenerateGeometryError` for a (near) zero or rank-1 ``E`` or when
    no candidate puts any point in front of both cameras.
    """
    E = np.asarray(E, dtype=np.float64)
    norm = np.linalg.norm(E)
    if norm < 1e-12:
        raise DegenerateGeometryError("decompose_essential: E is zero (no baseline)")
    U, s, Vt = svd3(E / norm)
    if s[1] < 1e-6 * s[0]:
        raise DegenerateGeometryError("decompose_essential: E has rank < 2")
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    u3 = U[:, 2]
    best, best_votes = None, 0
    for R in (U @ W @ Vt, U @ W.T @ Vt):
        for t in (u3, -u3):
            zA, zB = triangulate_depths(pA, pB, R, t)
            votes = int(np.sum((zA > 0) & (zB > 0)))
            if votes > best_votes:
                best, best_votes = (R, t), votes
    if best is None:
        raise DegenerateGeometryError("decompose_essential: no candidate has points in front of both cameras")
    return RelativePose(best[0], best[1] / np.linalg.norm(best[1])), best_votes


# -- metrics -------------------------------------------------------------------------


def rotation_angle_deg(R):
    R = np.asarray(R, dtype=np.float64)
    sin = 0.5 * np.linalg.norm([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    cos = 0.5 * (np.trace(R) - 1.0)
    return math.degrees(math.atan2(sin, cos))


def angle_between_deg(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return math.degrees(math.atan2(np.linalg.norm(np.cross(u, v)), float(u @ v)))


def pose_error_components(est, gt):
    return rotation_angle_deg(est.R.T @ gt.R), angle_between_deg(est.t, gt.t)


def pose_error(est, gt):
    """Maximum of the rotation and translation-direction angular errors, in degrees."""
    return max(pose_error_components(est, gt))


def error_auc(errors, thresholds):
    """Area under the cumulative error curve up to each threshold, normalized by it.

    The recall curve starts at (0, 0), steps up by ``1/n`` at each sorted
    error, is held flat up to the threshold and integrated with the
    trapezoidal rule.
    """
    errors = np.sort(np.asarray(errors, dtype=np.float64))
    if errors.size == 0:
        raise ValueError("error_auc: empty error list")
    if np.any(errors < 0):
        raise ValueError("error_auc: errors must be non-negative")
    recall = np.arange(1, errors.size + 1) / errors.size
    errors = np.concatenate([[0.0], errors])
    recall = np.concatenate([[0.0], recall])
    out = []
    for t in thresholds:
        last = np.searchsorted(errors, t)
        r = np.concatenate([recall[:last], [recall[last - 1]]])
        e = np.concatenate([errors[:last], [t]])
        out.append(float(np.sum((e[1:] - e[:-1]) * (r[1:] + r[:-1]) / 2.0) / t))
    return out


def pose_auc(errors, thresholds=(5, 10, 20)):
    return error_auc(errors, thresholds)


# -- homographies --------------------------------------------------------------------


def homography_from_plane(K_A, K_B, pose, normal, dist):
    """Homography of the plane ``normal . X = dist`` (camera-A frame), A pixels -> B pixels."""
    n = np.asarray(normal, dtype=np.float64)
    return K_B.K @ (pose.R + np.outer(pose.t, n) / dist) @ K_A.K_inv


def apply_homography(H, xy):
    p = _homog(xy) @ np.asarray(H).T
    return p[..., :2] / p[..., 2:3]


def fit_homography_dlt(xA, xB):
    """Normalized DLT; ``None`` for degenerate point sets."""
    xA = np.asarray(xA, dtype=np.float64)
    xB = np.asarray(xB, dtype=np.float64)
    qA, TA = _hartley(xA)
    qB, TB = _hartley(xB)
    x, y = qA[:, 0], qA[:, 1]
    u, v = qB[:, 0], qB[:, 1]
    z, o = np.zeros_like(x), np.ones_like(x)
    rows = np.concatenate(
        [
            np.stack([-x, -y, -o, z, z, z, u * x, u * y, u], axis=1),
            np.stack([z, z, z, -x, -y, -o, v * x, v * y, v], axis=1),
        ]
    )
    h, w0, w1, wmax = null_vector(rows)
    if wmax <= 0 or w1 <= DEGENERATE_RATIO * wmax:
        return None
    H = np.linalg.inv(TB) @ h.reshape(3, 3) @ TA
    if abs(H[2, 2]) < 1e-15:
        return None
    return H / H[2, 2]


def estimate_homography_ransac(xA, xB, iters=1000, inlier_thresh_px=1.0, seed=0, confidence=0.99999):
    xA = np.asarray(xA, dtype=np.float64)
    xB = np.asarray(xB, dtype=np.float64)
    n = len(xA)
    if n < 4:
        raise ValueError(f"estimate_homography_ransac: need >= 4 matches, got {n}")

    def residual(H):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.hypot(*(apply_homography(H, xA) - xB).T)
        return np.nan_to_num(r, nan=np.inf)

    return _ransac(n, 4, lambda idx: fit_homography_dlt(xA[idx], xB[idx]), residual, inlier_thresh_px, iters, seed, confidence)


def image_corners(width, height):
    return np.array([[0.0, 0.0], [width - 1.0, 0.0], [width - 1.0, height - 1.0], [0.0, height - 1.0]])


def corner_error(H_est, H_gt, width, height):
    """Mean distance between the four image corners mapped by each homography."""
    for name, H in (("H_est", H_est), ("H_gt", H_gt)):
        H = np.asarray(H, dtype=np.float64)
        if abs(np.linalg.det(H)) <= 1e-12 * np.abs(H).max() ** 3:
            raise DegenerateGeometryError(f"corner_error: {name} is singular")
    c = image_corners(width, height)
    return float(np.mean(np.hypot(*(apply_homography(H_est, c) - apply_homography(H_gt, c)).T)))


def homography_corner_auc(H_est, H_gt, dims, thresholds=(3, 5, 10)):
    """Corner-error AUC over a set of image pairs.

    ``H_est``/``H_gt`` are sequences of 3x3 matrices; ``dims`` is
    ``(width, height)`` shared by all pairs or one tuple per pair.
    """
    if len(H_est) != len(H_gt):
        raise ValueError("homography_corner_auc: list lengths differ")
    if len(dims) == 2 and np.isscalar(dims[0]):
        dims = [dims] * len(H_est)
    errs = [corner_error(a, b, w, h) for a, b, (w, h) in zip(H_est, H_gt, dims)]
    return error_auc(errs, thresholds)

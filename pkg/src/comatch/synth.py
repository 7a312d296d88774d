"""Synthetic two-view scenes with exact geometry, plus oracle feature maps.

Scenes are ray cast: every pixel's ray is intersected with one or more
textured planes (nearest positive hit), which yields exact depth maps for
both views.  Plane textures are rasters sampled bilinearly.  Oracle
features encode each surface point's position with sinusoids, so
corresponding tokens/pixels in the two views receive identical codes.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .geometry import (
    Intrinsics,
    RelativePose,
    apply_homography,
    covisibility_labels,
    grid_centers,
    homography_from_plane,
    in_image,
    rotation_about,
    warp_point,
)
from .matcher import OracleFeatures

# fixed permutation for the value-noise lattice hash; stored so textures are
# identical on every platform
PERM = np.array(
    [1, 9, 54, 57, 23, 51, 55, 46, 62, 6, 41, 10, 14, 20, 40, 2,
     15, 12, 45, 17, 48, 32, 3, 53, 49, 7, 21, 52, 61, 43, 28, 29,
     25, 34, 27, 35, 37, 33, 56, 24, 39, 59, 8, 42, 58, 63, 31, 36,
     60, 16, 38, 47, 50, 4, 19, 13, 22, 26, 30, 18, 0, 44, 11, 5],
    dtype=np.int64,
)  # fmt: skip

TEXTURE_SIZE = 512
TEXELS_PER_UNIT = 48.0
MAX_ATTEMPTS = 10


# -- textures -----------------------------------------------------------------------------


def value_noise_texture(seed, size=TEXTURE_SIZE):
    """Periodic multi-octave value noise in [0, 1] built on :data:`PERM`."""
    rng = np.random.default_rng(seed)
    out = np.zeros((size, size))
    total = 0.0
    for spacing, amp in ((32, 0.45), (16, 0.25), (8, 0.18), (4, 0.12)):
        n = size // spacing
        ox, oy = rng.integers(0, 64, size=2)
        li = (np.arange(n) + ox) % 64
        lj = (np.arange(n) + oy) % 64
        lattice = PERM[(PERM[li][:, None] + lj[None, :]) % 64] / 63.0
        f = (np.arange(size) % spacing) / spacing
        f = f * f * (3 - 2 * f)
        i0 = np.arange(size) // spacing
        i1 = (i0 + 1) % n
        rows = lattice[i0] * (1 - f)[:, None] + lattice[i1] * f[:, None]
        out += amp * (rows[:, i0] * (1 - f)[None, :] + rows[:, i1] * f[None, :])
        total += amp
    return out / total


def checker_texture(seed, size=TEXTURE_SIZE, period=16):
    rng = np.random.default_rng(seed)
    lo, hi = sorted(rng.uniform(0.1, 0.9, size=2))
    if hi - lo < 0.3:
        lo, hi = 0.2, 0.8
    ij = np.arange(size) // period
    return np.where((ij[:, None] + ij[None, :]) % 2 == 0, lo, hi)


def make_texture(kind, seed):
    if kind == "value-noise":
        return value_noise_texture(seed)
    if kind == "checker":
        return checker_texture(seed)
    raise ValueError(f"unknown texture {kind!r} (expected 'checker' or 'value-noise')")


def sample_texture(tex, u, v):
    """Bilinear sample with wrap-around at texel coordinates ``(u, v)``."""
    n = tex.shape[0]
    u0 = np.floor(u)
    v0 = np.floor(v)
    fu, fv = u - u0, v - v0
    u0 = u0.astype(np.int64) % n
    v0 = v0.astype(np.int64) % n
    u1, v1 = (u0 + 1) % n, (v0 + 1) % n
    top = tex[v0, u0] * (1 - fu) + tex[v0, u1] * fu
    bot = tex[v1, u0] * (1 - fu) + tex[v1, u1] * fu
    return top * (1 - fv) + bot * fv


# -- planes and ray casting -------------------------------------------------------------------


@dataclass
class Plane:
    """``normal . X = dist`` in camera-A coordinates, with its own texture."""

    normal: np.ndarray
    dist: float
    texture: np.ndarray = field(repr=False)
    offset: tuple = (0.0, 0.0)

    def basis(self):
        n = self.normal
        a = np.array([0.0, 1.0, 0.0]) if abs(n[1]) < 0.9 else np.array([1.0, 0.0, 0.0])
        e1 = np.cross(a, n)
        e1 /= np.linalg.norm(e1)
        return e1, np.cross(n, e1)

    def shade(self, X):
        e1, e2 = self.basis()
        o = self.normal * self.dist
        u = (X - o) @ e1 * TEXELS_PER_UNIT + self.offset[0]
        v = (X - o) @ e2 * TEXELS_PER_UNIT + self.offset[1]
        return sample_texture(self.texture, u, v)


def _pixel_rays(K, H, W):
    ys, xs = np.mgrid[0:H, 0:W].astype(np.float64)
    n = K.normalize(np.stack([xs, ys], axis=-1))
    return np.concatenate([n, np.ones((H, W, 1))], axis=-1)


def cast(K, H, W, planes, R_cw=np.eye(3), center=np.zeros(3)):
    """Render one view.

    ``R_cw`` rotates camera rays into the A frame and ``center`` is the
    camera centre in that frame.  Returns ``(image, depth, plane_id)``;
    depth 0 / id -1 where no plane is hit in front of the camera.
    """
    d = _pixel_rays(K, H, W) @ R_cw.T
    lam = np.full((H, W), np.inf)
    pid = np.full((H, W), -1)
    for k, p in enumerate(planes):
        denom = d @ p.normal
        with np.errstate(divide="ignore", invalid="ignore"):
            lk = (p.dist - center @ p.normal) / denom
        ok = np.isfinite(lk) & (lk > 1e-9) & (lk < lam)
        lam[ok] = lk[ok]
        pid[ok] = k
    img = np.zeros((H, W))
    for k, p in enumerate(planes):
        m = pid == k
        if m.any():
            img[m] = p.shade(center + d[m] * lam[m][:, None])
    depth = np.where(pid >= 0, lam, 0.0)  # ray z-component is 1 in camera coords
    return img, depth, pid


# -- scene bundle ------------------------------------------------------------------------------------


@dataclass
class SceneBundle:
    image_A: np.ndarray  # float32 [H, W] in [0, 1]
    image_B: np.ndarray
    K_A: Intrinsics
    K_B: Intrinsics
    pose: RelativePose  # A -> B
    depth_A: np.ndarray  # [H, W], 0 = invalid
    depth_B: np.ndarray
    homography: np.ndarray = None  # A pixels -> B pixels, planar scenes only
    kind: str = "planar"
    seed: int = 0
    planes: list = field(default_factory=list)  # [(normal, dist)] for the record
    occluder_B: np.ndarray = None  # bool [H, W] mask of the B-only occluder

    @property
    def shape(self):
        return self.image_A.shape

    @property
    def planar(self):
        return self.homography is not None

    def labels(self, cell=8):
        """Token covisibility labels ``(A, B)`` on the 1/``cell`` grids."""
        H, W = self.shape
        h, w = H // cell, W // cell
        pts = grid_centers(h, w, cell)
        la = covisibility_labels(pts, token_depths(self.depth_A, h, w, cell), self.depth_B, self.K_A, self.K_B, self.pose)
        lb = covisibility_labels(
            pts, token_depths(self.depth_B, h, w, cell), self.depth_A, self.K_B, self.K_A, self.pose.inverse()
        )
        return la.reshape(h, w), lb.reshape(h, w)


def _random_pose(rng, max_rot_deg, baseline):
    R = rotation_about(rng.normal(size=3), rng.uniform(0.3, 1.0) * max_rot_deg)
    direction = rng.normal(size=3) * np.array([1.0, 1.0, 0.4])
    t = direction / np.linalg.norm(direction) * rng.uniform(*baseline)
    return RelativePose(R, t)


def _tilted_normal(rng, max_tilt_deg):
    axis = np.array([*rng.normal(size=2), 0.0])
    R = rotation_about(axis, rng.uniform(0.0, max_tilt_deg))
    return R @ np.array([0.0, 0.0, 1.0])


def _render_pair(K, H, W, planes, pose, seed, kind):
    img_a, depth_a, _ = cast(K, H, W, planes)
    img_b, depth_b, _ = cast(K, H, W, planes, pose.R.T, -pose.R.T @ pose.t)
    return SceneBundle(
        img_a.astype(np.float32),
        img_b.astype(np.float32),
        K,
        K,
        pose,
        depth_a,
        depth_b,
        kind=kind,
        seed=seed,
        planes=[(p.normal.copy(), float(p.dist)) for p in planes],
    )


def default_intrinsics(H, W, focal=None):
    f = float(focal) if focal is not None else float(max(H, W))
    return Intrinsics(f, f, (W - 1) / 2.0, (H - 1) / 2.0)


def _check_dims(H, W):
    if H % 8 or W % 8:
        raise ValueError(f"scene size {H}x{W} must be divisible by 8")


def _overlap(scene):
    la, lb = scene.labels()
    return min(la.mean(), lb.mean())


def make_planar_scene(
    seed,
    H=128,
    W=160,
    texture="value-noise",
    max_rot_deg=8.0,
    baseline=(0.3, 0.8),
    depth=(4.0, 6.0),
    max_tilt_deg=25.0,
    focal=None,
    pose=None,
    plane=None,
    min_overlap=0.5,
):
    """One textured plane seen by two cameras.

    ``pose`` / ``plane=(normal, dist)`` override the random draws.  Poses
    that put the plane behind a camera, or leave less than ``min_overlap``
    of the tokens covisible, are redrawn up to 10 times.
    """
    _check_dims(H, W)
    rng = np.random.default_rng(seed)
    K = default_intrinsics(H, W, focal)
    tex = make_texture(texture, int(rng.integers(2**31)))
    for _ in range(MAX_ATTEMPTS):
        p = pose if pose is not None else _random_pose(rng, max_rot_deg, baseline)
        if plane is not None:
            n, dist = np.asarray(plane[0], dtype=np.float64), float(plane[1])
        else:
            n, dist = _tilted_normal(rng, max_tilt_deg), rng.uniform(*depth)
        pl = Plane(n / np.linalg.norm(n), dist, tex, tuple(rng.uniform(0, TEXTURE_SIZE, 2)))
        scene = _render_pair(K, H, W, [pl], p, seed, "planar")
        if (scene.depth_A > 0).all() and (scene.depth_B > 0).all() and _overlap(scene) >= min_overlap:
            scene.homography = homography_from_plane(K, K, p, pl.normal, pl.dist)
            return scene
        if pose is not None and plane is not None:
            break
    raise ValueError(f"make_planar_scene: no valid configuration for seed {seed} after {MAX_ATTEMPTS} attempts")


def make_shift_scene(seed, shift=(8.0, 4.5), H=128, W=160, depth=5.0, texture="value-noise", focal=None):
    """Fronto-parallel plane and a sideways camera move giving image flow ``shift`` (px) everywhere."""
    K = default_intrinsics(H, W, focal)
    t = np.array([shift[0] * depth / K.fx, shift[1] * depth / K.fy, 0.0])
    # X_B = X_A + t moves image points by +f t / z
    scene = make_planar_scene(
        seed, H, W, texture, pose=RelativePose(np.eye(3), t), plane=([0.0, 0.0, 1.0], depth), focal=focal, min_overlap=0.3
    )
    scene.kind = "shift"
    return scene


def make_multiplane_scene(seed, H=128, W=160, texture="value-noise", max_rot_deg=8.0, baseline=(1.0, 1.5), focal=None):
    """Two planes meeting in a concave crease (an open book facing the camera).

    Defaults use a wide field of view (focal = 0.625 * longer side) and a
    long baseline so the relative pose is well conditioned for 8-point
    estimation from a few hundred matches.
    """
    _check_dims(H, W)
    rng = np.random.default_rng(seed)
    K = default_intrinsics(H, W, focal if focal is not None else 0.625 * max(H, W))
    for _ in range(MAX_ATTEMPTS):
        slope = rng.uniform(0.4, 0.9)
        spin = rotation_about([0.0, 0.0, 1.0], rng.uniform(0.0, 180.0))
        tilt = rotation_about([*rng.normal(size=2), 0.0], rng.uniform(0.0, 10.0))
        z0 = rng.uniform(5.0, 7.0)
        planes = []
        for sgn in (1.0, -1.0):
            n = tilt @ spin @ np.array([sgn * slope, 0.0, 1.0])
            norm = np.linalg.norm(n)
            # plane through (0, 0, z0) before tilting about the origin
            dist = float(n @ (tilt @ np.array([0.0, 0.0, z0]))) / norm
            tex = make_texture(texture, int(rng.integers(2**31)))
            planes.append(Plane(n / norm, dist, tex, tuple(rng.uniform(0, TEXTURE_SIZE, 2))))
        p = _random_pose(rng, max_rot_deg, baseline)
        scene = _render_pair(K, H, W, planes, p, seed, "multiplane")
        if (scene.depth_A > 0).all() and (scene.depth_B > 0).all() and _overlap(scene) >= 0.5:
            return scene
    raise ValueError(f"make_multiplane_scene: no valid configuration for seed {seed}")


def make_occlusion_scene(seed, fraction=0.2, H=128, W=160, texture="value-noise", focal=None):
    """Planar background plus a fronto-parallel rectangle present only in view B.

    Camera B moves straight towards the plane, so B's whole background is
    seen by A and the occluder is the only non-covisible content of B.  The
    occluder sits at half the background depth at its centre and covers
    ``fraction`` of view B, rounded to whole pixels.
    """
    _check_dims(H, W)
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng([seed, 1])
    forward = rng.uniform(0.3, 0.6)
    pose = RelativePose(np.eye(3), [0.0, 0.0, -forward])
    base = make_planar_scene(seed, H, W, texture, pose=pose, max_tilt_deg=15.0, focal=focal, min_overlap=0.5)
    aspect = rng.uniform(0.7, 1.4)
    area = fraction * H * W
    h = int(round(min(H - 2, math.sqrt(area / aspect))))
    w = int(round(min(W - 2, area / h)))
    y0 = int(rng.integers(0, H - h + 1))
    x0 = int(rng.integers(0, W - w + 1))
    z = 0.5 * float(base.depth_B[y0 + h // 2, x0 + w // 2])
    tex = checker_texture(int(rng.integers(2**31)), period=6)
    scene = base
    scene.image_B = scene.image_B.copy()
    scene.depth_B = scene.depth_B.copy()
    mask = np.zeros((H, W), bool)
    mask[y0 : y0 + h, x0 : x0 + w] = True
    ys, xs = np.nonzero(mask)
    scene.image_B[mask] = sample_texture(tex, xs * 1.0, ys * 1.0).astype(np.float32)
    scene.depth_B[mask] = z
    scene.occluder_B = mask
    scene.homography = None
    scene.kind = "occlusion"
    return scene


# -- ground-truth helpers ------------------------------------------------------------------------


def token_depths(depth, h, w, cell=8):
    """Depth at cell centres by bilinear interpolation of inverse depth.

    Inverse depth is affine in pixel coordinates on a plane, so this is
    exact away from depth discontinuities.  0 where any neighbour is invalid.
    """
    depth = np.asarray(depth, dtype=np.float64)
    pts = grid_centers(h, w, cell)
    x0 = np.floor(pts[:, 0]).astype(np.int64)
    y0 = np.floor(pts[:, 1]).astype(np.int64)
    fx = pts[:, 0] - x0
    fy = pts[:, 1] - y0
    H, W = depth.shape
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    q = [depth[y0, x0], depth[y0, x1], depth[y1, x0], depth[y1, x1]]
    valid = np.all([v > 0 for v in q], axis=0)
    inv = [np.where(valid, 1.0 / np.where(v > 0, v, 1.0), 0.0) for v in q]
    s = (inv[0] * (1 - fx) + inv[1] * fx) * (1 - fy) + (inv[2] * (1 - fx) + inv[3] * fx) * fy
    return np.where(valid, 1.0 / np.where(valid, s, 1.0), 0.0)


def audit(scene, tol_px=1e-4):
    """Consistency checks every bundle must pass; raises ``AssertionError`` with details."""
    H, W = scene.shape
    da, db = scene.depth_A, scene.depth_B
    if (da < 0).any() or (db < 0).any():
        raise AssertionError("audit: negative depth")
    ys, xs = np.mgrid[0:H:3, 0:W:3]
    xa = np.stack([xs.ravel(), ys.ravel()], axis=-1).astype(np.float64)
    d = da[ys.ravel(), xs.ravel()]
    xb, zb, valid = warp_point(xa, d, scene.K_A, scene.K_B, scene.pose)
    back, _, ok = warp_point(xb[valid], zb[valid], scene.K_B, scene.K_A, scene.pose.inverse())
    err = np.abs(back - xa[valid]).max(initial=0.0)
    if err > tol_px:
        raise AssertionError(f"audit: A->B->A round trip error {err:.3g} px")
    if scene.homography is not None:
        hx = apply_homography(scene.homography, xa[valid])
        herr = np.abs(hx - xb[valid]).max(initial=0.0)
        if herr > 1e-6 * max(1.0, np.abs(xb[valid]).max()):
            raise AssertionError(f"audit: homography disagrees with depth warp by {herr:.3g} px")
    return True


# -- oracle features -----------------------------------------------------------------------------------


def ring_frequencies(magnitudes, n_dirs):
    """Frequency vectors on concentric rings (rad / px), ``len(magnitudes) * n_dirs`` rows."""
    ang = (np.arange(n_dirs) + 0.5) * np.pi / n_dirs
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    return np.concatenate([m * dirs for m in magnitudes])


COARSE_MAGNITUDES = (0.05, 0.1, 0.2, 0.4)
FINE_MAGNITUDE = 0.3
FINE_CURVATURE = 2.0  # target logit curvature (per px^2) seen by the stage-2 soft-argmax


def sinusoid_codes(xy, freqs, scale=1.0):
    """``sqrt(scale / F) [cos(w.x), sin(w.x)]``: inner products equal ``scale * mean cos(w.(x - y))``."""
    ph = np.asarray(xy, dtype=np.float64) @ freqs.T
    F = freqs.shape[0]
    return (np.concatenate([np.cos(ph), np.sin(ph)], axis=-1) * math.sqrt(scale / F)).astype(np.float32)


def _random_codes(rng, n, dim, scale):
    v = rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return (v * math.sqrt(scale)).astype(np.float32)


def fine_scale(magnitude=FINE_MAGNITUDE, curvature=FINE_CURVATURE):
    # mean over a ring of cos(w.r) ~ J0(|w| r) ~ 1 - |w|^2 r^2 / 4
    return 4.0 * curvature / magnitude**2


def occluded_mask(scene, points_b, depth_b):
    """1 for points of B that land inside A with inconsistent depth (or have no depth)."""
    back, z, valid = warp_point(points_b, depth_b, scene.K_B, scene.K_A, scene.pose.inverse())
    inside = valid & in_image(back, scene.depth_A.shape)
    lab = covisibility_labels(points_b, depth_b, scene.depth_A, scene.K_B, scene.K_A, scene.pose.inverse())
    return ((np.asarray(depth_b) <= 0) | (inside & (lab == 0))).astype(np.uint8)


def oracle_features(scene, d=256, fine_dim=64, seed=0, cell=8):
    """Oracle coarse (1/8) and fine (full-resolution) features for a scene.

    Surface points are encoded by their position in view B's pixel frame, so
    a point and its projection share one code in both views.  Tokens and
    pixels of A that are not covisible, and those of B that are occluded in
    A, get random codes of the same norm.  B points that merely fall outside
    A keep their position code: nothing in A lands near them.
    """
    if d % 2 or fine_dim % 2:
        raise ValueError(f"feature dims must be even, got d={d}, fine_dim={fine_dim}")
    if (d // 2) % len(COARSE_MAGNITUDES):
        raise ValueError(f"d={d}: d/2 must be a multiple of {len(COARSE_MAGNITUDES)}")
    rng = np.random.default_rng([seed, 7])
    H, W = scene.shape
    h, w = H // cell, W // cell
    fc = ring_frequencies(COARSE_MAGNITUDES, (d // 2) // len(COARSE_MAGNITUDES))
    ff = ring_frequencies((FINE_MAGNITUDE,), fine_dim // 2)
    s_f = fine_scale()

    # coarse tokens
    pts = grid_centers(h, w, cell)
    la, _ = scene.labels(cell)
    lb = occluded_mask(scene, pts, token_depths(scene.depth_B, h, w, cell)) == 0
    za = token_depths(scene.depth_A, h, w, cell)
    xb, _, _ = warp_point(pts, za, scene.K_A, scene.K_B, scene.pose)
    cA = sinusoid_codes(np.where(la.reshape(-1, 1) > 0, xb, 0.0), fc)
    cB = sinusoid_codes(pts, fc)
    na, nb = la.reshape(-1) == 0, lb.reshape(-1) == 0
    cA[na] = _random_codes(rng, int(na.sum()), d, 1.0)
    cB[nb] = _random_codes(rng, int(nb.sum()), d, 1.0)

    # fine pixels
    ys, xs = np.mgrid[0:H, 0:W]
    px = np.stack([xs.ravel(), ys.ravel()], axis=-1).astype(np.float64)
    pa = covisibility_labels(px, scene.depth_A.reshape(-1), scene.depth_B, scene.K_A, scene.K_B, scene.pose)
    pb = occluded_mask(scene, px, scene.depth_B.reshape(-1)) == 0
    wb, _, _ = warp_point(px, scene.depth_A.reshape(-1), scene.K_A, scene.K_B, scene.pose)
    fA = sinusoid_codes(np.where(pa[:, None] > 0, wb, 0.0), ff, s_f)
    fB = sinusoid_codes(px, ff, s_f)
    fA[pa == 0] = _random_codes(rng, int((pa == 0).sum()), fine_dim, s_f)
    fB[pb == 0] = _random_codes(rng, int((pb == 0).sum()), fine_dim, s_f)

    return OracleFeatures(cA.reshape(h, w, d), cB.reshape(h, w, d), fA.reshape(H, W, fine_dim), fB.reshape(H, W, fine_dim))


# -- persistence ------------------------------------------------------------------------------------------


def save_scene(scene, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    io.write_pgm(directory / "imageA.pgm", scene.image_A)
    io.write_pgm(directory / "imageB.pgm", scene.image_B)
    io.save_tsr1(directory / "depthA.tsr", scene.depth_A.astype(np.float32))
    io.save_tsr1(directory / "depthB.tsr", scene.depth_B.astype(np.float32))
    geo = {
        "kind": scene.kind,
        "seed": int(scene.seed),
        "K_A": scene.K_A.to_dict(),
        "K_B": scene.K_B.to_dict(),
        "R": [float(v) for v in scene.pose.R.ravel()],
        "t": [float(v) for v in scene.pose.t],
        "depth_A": "depthA.tsr",
        "depth_B": "depthB.tsr",
        "homography": None if scene.homography is None else [float(v) for v in scene.homography.ravel()],
        "planes": [{"normal": [float(v) for v in n], "dist": float(dd)} for n, dd in scene.planes],
    }
    if scene.occluder_B is not None:
        io.save_tsr1(directory / "occluderB.tsr", scene.occluder_B.astype(np.float32))
        geo["occluder_B"] = "occluderB.tsr"
    io.write_json(directory / "geometry.json", geo)


def load_scene(directory):
    """Read a scene directory; images come back quantized to 8 bits, depths as stored."""
    directory = Path(directory)
    path = directory / "geometry.json"
    if not path.exists():
        raise FileNotFoundError(f"{path}: missing geometry file")
    geo = json.loads(path.read_text())
    H = None if geo.get("homography") is None else np.array(geo["homography"], dtype=np.float64).reshape(3, 3)
    occ = geo.get("occluder_B")
    return SceneBundle(
        io.read_pgm(directory / "imageA.pgm"),
        io.read_pgm(directory / "imageB.pgm"),
        Intrinsics.from_dict(geo["K_A"]),
        Intrinsics.from_dict(geo["K_B"]),
        RelativePose(np.array(geo["R"]).reshape(3, 3), np.array(geo["t"])),
        io.load_tsr1(directory / geo["depth_A"]).astype(np.float64),
        io.load_tsr1(directory / geo["depth_B"]).astype(np.float64),
        homography=H,
        kind=geo.get("kind", "planar"),
        seed=int(geo.get("seed", 0)),
        planes=[(np.array(p["normal"]), float(p["dist"])) for p in geo.get("planes", [])],
        occluder_B=None if occ is None else io.load_tsr1(directory / occ) > 0.5,
    )


SCENE_KINDS = {
    "planar": make_planar_scene,
    "multiplane": make_multiplane_scene,
    "occlusion": make_occlusion_scene,
    "shift": make_shift_scene,
}


def make_scene(kind, seed, **kwargs):
    try:
        fn = SCENE_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown scene kind {kind!r}; choose from {sorted(SCENE_KINDS)}") from None
    return fn(seed, **kwargs)

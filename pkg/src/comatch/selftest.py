"""Reduced-size oracle suites behind ``comatch selftest`` and the gradient checks behind ``comatch gradcheck``."""

import tempfile
import time
from pathlib import Path

import numpy as np

from . import geometry as geo
from . import io, kernels, oracles
from .dcat import (
    aggregate_covisibility,
    baseline_condense,
    condense_key_value,
    condense_query,
    covis_attention,
    rope_basis,
    rotate,
    vanilla_attention,
)
from .errors import TensorFormatError
from .matcher import dual_softmax, match_pipeline, mnn_filter, soft_argmax3x3, soft_argmax3x3_jacobian
from .supervision import fine_stage2_loss, fine_stage2_loss_grad, finite_diff_check, theta_f

GRAD_TOL = 1e-4


def suite_kernels(rng, n=10):
    worst = 0.0
    for name, mod in kernels.backends().items():
        for _ in range(n):
            x = rng.standard_normal((6, 6, 3)).astype(np.float32)
            w = rng.standard_normal((3, 3, 3, 2)).astype(np.float32)
            stride = int(rng.integers(1, 3))
            worst = max(worst, np.abs(mod.conv2d(x, w, stride, 1) - oracles.conv2d_loop(x, w, stride, 1)).max())
            wd = rng.standard_normal((2, 2, 3)).astype(np.float32)
            worst = max(worst, np.abs(mod.depthwise_conv2d(x, wd, 2, 0) - oracles.depthwise_loop(x, wd, 2, 0)).max())
            worst = max(worst, np.abs(mod.max_pool2d(x, 2) - oracles.max_pool_loop(x, 2)).max())
            c = rng.standard_normal((6, 6)).astype(np.float32)
            worst = max(worst, np.abs(mod.weighted_pool(x, c, 3) - oracles.weighted_pool_loop(x, c, 3)).max())
    return worst <= 1e-5, f"max abs diff {worst:.2e}"


def suite_attention(rng, n=10):
    worst = 0.0
    for _ in range(n):
        Q, K, V = (rng.standard_normal((m, 4)).astype(np.float32) for m in (3, 5, 5))
        c = rng.uniform(0, 1, 5).astype(np.float32)
        worst = max(worst, np.abs(vanilla_attention(Q, K, V) - oracles.attention_loop(Q, K, V)).max())
        worst = max(worst, np.abs(covis_attention(Q, K, V, c) - oracles.attention_loop(Q, K, V, c)).max())
    return worst <= 1e-5, f"max abs diff {worst:.2e}"


def suite_coarse_matching(rng, n=10):
    worst, mnn_ok = 0.0, True
    for _ in range(n):
        C = rng.standard_normal((4, 5)).astype(np.float32) * 3
        S = dual_softmax(C)
        worst = max(worst, np.abs(S - oracles.dual_softmax_loop(C)).max())
        got = mnn_filter(S, 0.0).pairs()
        mnn_ok &= got == oracles.mnn_loop(S)
    return worst <= 1e-5 and mnn_ok, f"dual-softmax diff {worst:.2e}, mnn {'ok' if mnn_ok else 'MISMATCH'}"


def suite_reductions(rng):
    F = rng.standard_normal((8, 8, 4)).astype(np.float32)
    k = rng.standard_normal((4, 4, 4)).astype(np.float32)
    ones = np.ones((8, 8), np.float32)
    q_base, _ = baseline_condense(F, F, k, 4)
    e1 = np.abs(condense_query(F, ones, k) - q_base).max()
    Q, K, V = (rng.standard_normal((m, 4)).astype(np.float32) for m in (3, 6, 6))
    e2 = np.abs(covis_attention(Q, K, V, np.ones(6)) - vanilla_attention(Q, K, V)).max()
    avg = F.reshape(2, 4, 2, 4, 4).mean(axis=(1, 3))
    e3 = np.abs(condense_key_value(F, np.full((8, 8), 0.3, np.float32), 4) - avg).max()
    agg = aggregate_covisibility(ones, 4)
    ok = max(e1, e2, e3) <= 1e-6 and np.all(agg == 1.0)
    return ok, f"query {e1:.1e}, attention {e2:.1e}, pooling {e3:.1e}"


def suite_rope(rng, n=20):
    basis = rope_basis(16)
    worst = 0.0
    for _ in range(n):
        q, k = rng.standard_normal(16), rng.standard_normal(16)
        xi, xj, dt = rng.uniform(-50, 50, (3, 2))
        s0 = rotate(q, xi, basis) @ rotate(k, xj, basis)
        s1 = rotate(q, xi + dt, basis) @ rotate(k, xj + dt, basis)
        norm = abs(np.linalg.norm(rotate(q, xi, basis)) - np.linalg.norm(q))
        worst = max(worst, abs(s0 - s1), norm)
    return worst <= 1e-5, f"max deviation {worst:.2e}"


def suite_sampson(rng):
    E = geo.essential_from_pose(geo.RelativePose(np.eye(3), [1.0, 0.0, 0.0]))
    v = geo.sampson_distance([0.0, 0.0], [0.0, 0.1], E)
    return abs(v - 0.005) <= 1e-9, f"value {v:.12f}"


def suite_tsr1(rng):
    a = rng.standard_normal((3, 4, 2)).astype(np.float32)
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "x.tsr"
        io.save_tsr1(p, a)
        ok = np.array_equal(io.load_tsr1(p), a)
        buf = p.read_bytes()
        p.write_bytes(buf[:-6])
        try:
            io.load_tsr1(p)
            ok, msg = False, "truncated file accepted"
        except TensorFormatError as exc:
            msg = str(exc).replace(str(p), p.name)  # no temp path in the report
            ok = ok and "offset" in msg
    return ok, msg


def suite_identity_scene(rng):
    from .synth import make_planar_scene, oracle_features

    scene = make_planar_scene(0, H=64, W=64, pose=geo.RelativePose(np.eye(3), np.zeros(3)), plane=([0, 0, 1.0], 5.0))
    r = match_pipeline(scene.image_A, scene.image_B, oracle=oracle_features(scene))
    diag = bool(np.all(r.coarse.i == r.coarse.j)) and len(r.coarse) == 64
    dev = float(np.abs(r.fine.xA - r.fine.xB).max(initial=0.0))
    return diag and dev < 0.5, f"{len(r.coarse)} coarse matches, max |xA - xB| {dev:.2e}"


SELFTEST_SUITES = {
    "kernels": suite_kernels,
    "attention": suite_attention,
    "coarse-matching": suite_coarse_matching,
    "reductions": suite_reductions,
    "rope": suite_rope,
    "sampson": suite_sampson,
    "tsr1": suite_tsr1,
    "identity-scene": suite_identity_scene,
}


def run_selftest(seed=0):
    """Run every suite; returns ``[(name, ok, detail, seconds)]``."""
    out = []
    for name, fn in SELFTEST_SUITES.items():
        rng = np.random.default_rng([seed, len(out)])
        t0 = time.perf_counter()
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crashing suite is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail, time.perf_counter() - t0))
    return out


# -- gradient checks --------------------------------------------------------------------------


def _random_pair(rng):
    R = geo.rotation_about(rng.normal(size=3), rng.uniform(1, 20))
    E = geo.essential_from_pose(geo.RelativePose(R, rng.normal(size=3)))
    return E, rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 2)


def check_sampson(rng, n=100, grad_fn=geo.sampson_gradient):
    worst = 0.0
    for _ in range(n):
        E, a, b = _random_pair(rng)
        f = lambda x: geo.sampson_distance(x[:2], x[2:], E)  # noqa: E731
        g = lambda x: grad_fn(x[:2], x[2:], E)  # noqa: E731
        worst = max(worst, finite_diff_check(f, g, np.concatenate([a, b])))
    return worst


def check_fine_loss(rng, n=100, grad_fn=None):
    """Epipolar loss gradient w.r.t. pixel coordinates, skipping a band around the clamp."""
    K = geo.Intrinsics(160.0, 160.0, 79.5, 63.5)
    th = theta_f(K, K)
    worst, done = 0.0, 0
    while done < n:
        E, _, _ = _random_pair(rng)
        xa = rng.uniform(0, 160, (3, 2))
        # points near their epipolar lines so most terms are on the live branch
        lines = geo._homog(K.normalize(xa)) @ E.T
        pb = rng.uniform(-0.5, 0.5, (3, 2))
        pb[:, 1] = -(lines[:, 0] * pb[:, 0] + lines[:, 2]) / lines[:, 1] + rng.normal(0, 2e-3, 3)
        xb = K.denormalize(pb)
        d = np.atleast_1d(geo.sampson_distance(K.normalize(xa), K.normalize(xb), E))
        if np.any(np.abs(np.sqrt(d) - th) <= 1e-5):
            continue

        def f(x):
            return fine_stage2_loss(K.normalize(x[:, :2]), K.normalize(x[:, 2:]), E, th)

        def g(x):
            if grad_fn is not None:
                return grad_fn(x)
            _, gn = fine_stage2_loss_grad(K.normalize(x[:, :2]), K.normalize(x[:, 2:]), E, th)
            return gn / np.array([K.fx, K.fy, K.fx, K.fy])

        worst = max(worst, finite_diff_check(f, g, np.concatenate([xa, xb], axis=1)))
        done += 1
    return worst


def check_soft_argmax(rng, n=100):
    worst = 0.0
    for _ in range(n):
        s0 = rng.normal(0, 2, (3, 3))
        for axis in (0, 1):
            f = lambda x: soft_argmax3x3(x)[axis]  # noqa: E731
            g = lambda x: soft_argmax3x3_jacobian(x)[axis]  # noqa: E731
            worst = max(worst, finite_diff_check(f, g, s0))
    return worst


GRAD_SUITES = {
    "sampson_gradient": check_sampson,
    "fine_stage2_loss": check_fine_loss,
    "soft_argmax3x3": check_soft_argmax,
}


def run_gradcheck(seed=0, n=100, overrides=None):
    """``[(suite, max relative error, ok)]``; ``overrides`` maps suite -> replacement gradient for mutation tests."""
    out = []
    for k, (name, fn) in enumerate(GRAD_SUITES.items()):
        rng = np.random.default_rng([seed, k])
        kw = {}
        if overrides and name in overrides:
            kw["grad_fn"] = overrides[name]
        err = fn(rng, n, **kw)
        out.append((name, err, err <= GRAD_TOL))
    return out


import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comatch import oracles, synth
from comatch.backbone import extract_features, init_backbone
from comatch.config import RunConfig
from comatch.errors import ShapeError
from comatch.matcher import (
    FINE_WIDTH,
    OracleFeatures,
    cell_origin,
    consolidate,
    correlation_matrix,
    crop_and_consolidate,
    crop_patches,
    dual_softmax,
    fuse_fine,
    init_fine,
    match_pipeline,
    mnn_filter,
    soft_argmax3x3,
    soft_argmax3x3_jacobian,
    stage1_refine,
    stage2_refine,
)
from comatch.model import build_model
from comatch.supervision import finite_diff_check

GOLDEN_FUSE_SUM = -23978.141054091626  # seed 42 backbone, seed 7 fusion, 64x64 checkerboard


class TestCoarse:
    def test_self_correlation(self, rng):
        F = rng.standard_normal((5, 16))
        C = correlation_matrix(F, F, 10.0)
        np.testing.assert_allclose(np.diag(C), 10.0, atol=1e-5)

    def test_orthogonal(self):
        np.testing.assert_allclose(correlation_matrix(np.eye(3, 4), np.eye(4)[3:], 10.0), 0.0)

    def test_loop_oracle(self, rng):
        A, B = rng.standard_normal((3, 6)), rng.standard_normal((3, 6))
        ref = [[10 * a @ b / np.linalg.norm(a) / np.linalg.norm(b) for b in B] for a in A]
        np.testing.assert_allclose(correlation_matrix(A, B), ref, atol=1e-5)

    def test_grid_input_and_checks(self, rng):
        C = correlation_matrix(rng.standard_normal((2, 3, 8)), rng.standard_normal((4, 2, 8)))
        assert C.shape == (6, 8)
        with pytest.raises(ValueError):
            correlation_matrix(np.ones((2, 4)), np.ones((2, 4)), tau=0.0)
        with pytest.raises(ShapeError):
            correlation_matrix(np.ones((2, 4)), np.ones((2, 5)))

    def test_dual_softmax_cases(self, rng):
        np.testing.assert_allclose(dual_softmax(np.array([[3.0]])), [[1.0]])
        np.testing.assert_allclose(dual_softmax(100 * np.eye(2)), np.eye(2), atol=1e-4)
        C = rng.standard_normal((4, 5)) * 3
        S = dual_softmax(C)
        np.testing.assert_allclose(S, oracles.dual_softmax_loop(C), atol=1e-5)
        assert np.all((S > 0) & (S < 1))

    def test_dual_softmax_factors(self, rng):
        C = rng.standard_normal((6, 7)).astype(np.float32) * 4
        r = np.exp(C - C.max(1, keepdims=True))
        r /= r.sum(1, keepdims=True)
        c = np.exp(C - C.max(0, keepdims=True))
        c /= c.sum(0, keepdims=True)
        np.testing.assert_allclose(r.sum(1), 1.0, atol=1e-6)
        np.testing.assert_allclose(c.sum(0), 1.0, atol=1e-6)
        np.testing.assert_allclose(dual_softmax(C), r * c, atol=1e-6)

    def test_mnn_examples(self):
        S = np.array([[0.6, 0.1], [0.2, 0.5]])
        assert mnn_filter(S, 0.1).pairs() == [(0, 0), (1, 1)]
        assert len(mnn_filter(np.full((3, 3), 0.05), 0.1)) == 0
        assert mnn_filter(np.eye(4), 0.1).pairs() == [(k, k) for k in range(4)]

    def test_mnn_ties_lowest_index(self):
        S = np.full((3, 3), 0.5)
        assert mnn_filter(S, 0.1).pairs() == [(0, 0)]

    def test_mnn_theta_range(self):
        with pytest.raises(ValueError):
            mnn_filter(np.eye(2), 1.5)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 64), m=st.integers(1, 64), levels=st.integers(2, 50), seed=st.integers(0, 2**16))
def test_mnn_brute_force(n, m, levels, seed):
    S = np.random.default_rng(seed).integers(0, levels, (n, m)).astype(np.float32) / levels
    assert mnn_filter(S, 0.1).pairs() == oracles.mnn_loop(S, 0.1)


class TestFuseFine:
    def test_shapes_and_golden(self):
        ys, xs = np.mgrid[0:64, 0:64]
        img = (((xs // 8) + (ys // 8)) % 2).astype(np.float32)
        f = extract_features(img, init_backbone(42))
        out = fuse_fine(f.f8, f.f4, f.f2, init_fine(7))
        assert out.shape == (64, 64, FINE_WIDTH)
        np.testing.assert_allclose(out.astype(np.float64).sum(), GOLDEN_FUSE_SUM, rtol=1e-5)

    def test_zero(self):
        p = init_fine(0)
        out = fuse_fine(np.zeros((2, 2, 256)), np.zeros((4, 4, 128)), np.zeros((8, 8, 64)), p)
        assert not out.any()

    def test_dims(self):
        with pytest.raises(ShapeError):
            fuse_fine(np.zeros((2, 2, 256)), np.zeros((4, 6, 128)), np.zeros((8, 8, 64)), init_fine(0))


class TestPatches:
    def test_cell_geometry(self):
        o = cell_origin([0, 5, 23], grid_w=10)
        np.testing.assert_array_equal(o, [[0, 0], [40, 0], [24, 16]])
        # patch centre index 4 sits at pixel (8c + 4, 8r + 4)
        F = np.arange(32 * 80, dtype=np.float32).reshape(32, 80, 1)
        p = crop_patches(F, [23], 10)
        assert p[0, 4, 4, 0] == F[2 * 8 + 4, 3 * 8 + 4, 0]

    def test_zero_output_projection(self, rng):
        params = init_fine(0)
        params = {**params, "xattn.wo": np.zeros_like(params["xattn.wo"])}
        PA, PB = rng.standard_normal((2, 3, 8, 8, 64)).astype(np.float32)
        A2, B2 = consolidate(PA, PB, params)
        np.testing.assert_array_equal(A2, PA)
        np.testing.assert_array_equal(B2, PB)

    def test_symmetry(self, rng):
        P = rng.standard_normal((2, 8, 8, 64)).astype(np.float32)
        A2, B2 = consolidate(P, P.copy(), init_fine(1))
        np.testing.assert_array_equal(A2, B2)

    def test_crop_without_attention(self, rng):
        F = rng.standard_normal((16, 24, 4)).astype(np.float32)
        m = mnn_filter(np.eye(6), 0.1)
        PA, PB, dropped = crop_and_consolidate(F, F, m, (2, 3), (2, 3))
        assert dropped == 0 and PA.shape == (6, 8, 8, 4)
        np.testing.assert_array_equal(PA[4], F[8:16, 8:16])


def _brute_best_mutual(A, B):
    C = A.reshape(64, -1) @ B.reshape(64, -1).T
    best = None
    for i in range(64):
        for j in range(64):
            if C[i].argmax() == j and C[:, j].argmax() == i and C[i, j] > 0:
                if best is None or C[i, j] > best[0]:
                    best = (C[i, j], i, j)
    return best


class TestStage1:
    def test_shift_recovered(self, rng):
        field = rng.standard_normal((8, 9, 32)).astype(np.float32)
        A, B = field[:, 1:9], field[:, 0:8]  # A(y, x) == B(y, x + 1)
        (ya, xa), (yb, xb), fb = stage1_refine(A, B)
        assert not fb
        assert (xb - xa, yb - ya) == (1, 0)
        _, i, j = _brute_best_mutual(A, B)
        assert (ya * 8 + xa, yb * 8 + xb) == (i, j)

    def test_identical_deterministic(self, rng):
        P = rng.standard_normal((8, 8, 16)).astype(np.float32)
        assert stage1_refine(P, P) == stage1_refine(P.copy(), P.copy())
        (ya, xa), (yb, xb), fb = stage1_refine(P, P)
        assert (ya, xa) == (yb, xb) and not fb

    def test_orthogonal_falls_back(self, rng):
        A = np.zeros((8, 8, 4), np.float32)
        B = np.zeros((8, 8, 4), np.float32)
        A[..., 0] = rng.random((8, 8))
        B[..., 1] = rng.random((8, 8))
        assert stage1_refine(A, B) == ((4, 4), (4, 4), True)


class TestSoftArgmax:
    def test_one_hot_and_uniform(self):
        s = np.zeros((3, 3))
        s[1, 1] = 50.0
        np.testing.assert_allclose(soft_argmax3x3(s), [0, 0], atol=1e-12)
        np.testing.assert_allclose(soft_argmax3x3(np.zeros((3, 3))), [0, 0], atol=1e-15)

    def test_scalar_oracle(self):
        s = np.zeros((3, 3))
        s[1, 2] = np.log(9.0)  # row = dy + 1, column = dx + 1
        # weight 9 at (+1, 0) and 1 elsewhere: x = (9 + 1 + 1 - 3) / 17
        np.testing.assert_allclose(soft_argmax3x3(s), [8 / 17, 0.0], atol=1e-12)
        w = np.exp(s.ravel()) / np.exp(s.ravel()).sum()
        offs = [(dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]
        np.testing.assert_allclose(soft_argmax3x3(s), np.sum(w[:, None] * np.array(offs), axis=0), atol=1e-12)

    def test_batched_and_range(self, rng):
        s = rng.standard_normal((5, 3, 3)) * 10
        out = soft_argmax3x3(s)
        assert out.shape == (5, 2)
        assert np.all(np.abs(out) <= 1.0)
        with pytest.raises(ShapeError):
            soft_argmax3x3(np.zeros((3, 4)))

    def test_jacobian(self, rng):
        for _ in range(20):
            s = rng.normal(0, 2, (3, 3))
            for axis in (0, 1):
                err = finite_diff_check(lambda x: soft_argmax3x3(x)[axis], lambda x: soft_argmax3x3_jacobian(x)[axis], s)
                assert err < 1e-6


class TestStage2:
    def test_symmetric_case(self, rng):
        base = rng.standard_normal((3, 3, 8))
        F = np.zeros((9, 9, 8), np.float32)
        F[3:6, 3:6] = (base + base[::-1, ::-1]) / 2  # point symmetric
        xA, xB, border = stage2_refine(F, F, [[4, 4]], [[4, 4]])
        np.testing.assert_array_equal(xA, xB)
        np.testing.assert_allclose(xA, [[4, 4]], atol=1e-6)
        assert not border[0]

    def test_dominant_centre(self, rng):
        F = (rng.standard_normal((7, 7, 16)) * 0.01).astype(np.float32)
        F[3, 3] = 10.0
        xA, xB, _ = stage2_refine(F, F, [[3, 3]], [[3, 3]])
        np.testing.assert_allclose(xA, [[3, 3]], atol=1e-6)
        np.testing.assert_allclose(xB, [[3, 3]], atol=1e-6)

    def test_nine_cell_oracle(self, rng):
        # linear feature ramp plus noise
        ys, xs = np.mgrid[0:8, 0:8]
        FA = np.stack([0.3 * xs, 0.2 * ys, np.ones_like(xs)], -1) + rng.normal(0, 0.1, (8, 8, 3))
        FB = np.stack([0.25 * xs, -0.1 * ys, np.ones_like(xs)], -1) + rng.normal(0, 0.1, (8, 8, 3))
        FA, FB = FA.astype(np.float32), FB.astype(np.float32)
        pa, pb = (3, 5), (4, 2)
        xA, xB, _ = stage2_refine(FA, FB, [pa], [pb])
        f = 0.5 * (FA[pa[1], pa[0]].astype(np.float64) + FB[pb[1], pb[0]])
        for F, p, got in ((FA, pa, xA[0]), (FB, pb, xB[0])):
            w, off = [], []
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    w.append(np.exp(f @ F[p[1] + dy, p[0] + dx]))
                    off.append((dx, dy))
            w = np.array(w) / np.sum(w)
            np.testing.assert_allclose(got, np.array(p) + w @ np.array(off), atol=1e-5)

    def test_border_flag(self, rng):
        F = rng.standard_normal((6, 6, 4)).astype(np.float32)
        xA, xB, border = stage2_refine(F, F, [[0, 3], [2, 2]], [[3, 5], [3, 3]])
        np.testing.assert_array_equal(border, [True, False])
        assert np.all(np.isfinite(xA))

    def test_empty(self):
        xA, xB, border = stage2_refine(np.zeros((8, 8, 4)), np.zeros((8, 8, 4)), np.zeros((0, 2)), np.zeros((0, 2)))
        assert xA.shape == (0, 2) and len(border) == 0


class TestPipeline:
    def test_identity_scene(self, identity_scene):
        r = match_pipeline(identity_scene.image_A, identity_scene.image_B, oracle=synth.oracle_features(identity_scene))
        assert len(r.coarse) == 64
        np.testing.assert_array_equal(r.coarse.i, r.coarse.j)
        assert np.abs(r.fine.xA - r.fine.xB).max() < 0.5

    def test_range_bound(self, shift_scene):
        r = match_pipeline(shift_scene.image_A, shift_scene.image_B, oracle=synth.oracle_features(shift_scene))
        f = r.fine
        assert len(f) > 100
        assert np.abs(f.xA - f.xA_pix).max() <= 1.0
        assert np.abs(f.xB - f.xB_pix).max() <= 1.0

    def test_swap_consistency(self, shift_scene):
        o = synth.oracle_features(shift_scene)
        r = match_pipeline(shift_scene.image_A, shift_scene.image_B, oracle=o)
        swapped = OracleFeatures(o.coarse_B, o.coarse_A, o.fine_B, o.fine_A)
        s = match_pipeline(shift_scene.image_B, shift_scene.image_A, oracle=swapped)
        fwd = np.concatenate([r.fine.xA, r.fine.xB], axis=1)
        bwd = np.concatenate([s.fine.xB, s.fine.xA], axis=1)
        fwd = fwd[np.lexsort(fwd.T[::-1])]
        bwd = bwd[np.lexsort(bwd.T[::-1])]
        np.testing.assert_array_equal(fwd, bwd)

    def test_validation(self):
        with pytest.raises(ShapeError):
            match_pipeline(np.zeros((16, 16)), np.zeros((16, 16, 1)), oracle=None)
        with pytest.raises(ShapeError):
            match_pipeline(np.zeros((12, 16)), np.zeros((12, 16)), oracle=None)
        with pytest.raises(ValueError):
            match_pipeline(np.zeros((16, 16)), np.zeros((16, 16)))

    def test_empty_coarse_set(self, identity_scene):
        o = synth.oracle_features(identity_scene)
        r = match_pipeline(identity_scene.image_A, identity_scene.image_B, theta_c=1.0, oracle=o)
        assert r.empty and len(r.fine) == 0

    def test_learned_random_model_runs(self, rng):
        model = build_model(RunConfig(seed=0, L=2))
        img = rng.random((32, 32)).astype(np.float32)
        r1 = match_pipeline(img, img, model=model, theta_c=0.0)
        r2 = match_pipeline(img, img, model=model, theta_c=0.0)
        assert len(r1.covis_history) == 1
        assert set(r1.timing) == {"backbone", "transformer", "coarse_matching", "refinement", "total"}
        np.testing.assert_array_equal(r1.fine.xA, r2.fine.xA)
        np.testing.assert_array_equal(r1.coarse.i, r2.coarse.i)

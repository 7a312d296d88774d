import numpy as np
import pytest

from comatch import geometry as geo
from comatch import synth
from comatch.matcher import correlation_matrix, dual_softmax, mnn_filter


class TestTextures:
    def test_value_noise_range_and_determinism(self):
        a = synth.value_noise_texture(3, size=128)
        np.testing.assert_array_equal(a, synth.value_noise_texture(3, size=128))
        assert 0.0 <= a.min() and a.max() <= 1.0
        assert a.std() > 0.05

    def test_checker_contrast(self):
        t = synth.checker_texture(1, size=64, period=8)
        assert len(np.unique(t)) == 2
        assert t[0, 0] != t[0, 8]

    def test_unknown_texture(self):
        with pytest.raises(ValueError):
            synth.make_texture("stripes", 0)

    def test_sample_texture_bilinear(self):
        tex = np.arange(16.0).reshape(4, 4)
        assert synth.sample_texture(tex, np.array(1.5), np.array(2.0)) == pytest.approx(9.5)
        assert synth.sample_texture(tex, np.array(4.0), np.array(0.0)) == tex[0, 0]  # wraps


class TestPlanarScene:
    def test_identity_pose_bit_exact(self, identity_scene):
        np.testing.assert_array_equal(identity_scene.image_A, identity_scene.image_B)
        np.testing.assert_allclose(identity_scene.homography, np.eye(3), atol=1e-12)

    def test_two_pixel_translation_homography(self):
        K = synth.default_intrinsics(64, 64)
        t = np.array([2.0 * 5.0 / K.fx, 0.0, 0.0])
        scene = synth.make_planar_scene(0, H=64, W=64, pose=geo.RelativePose(np.eye(3), t), plane=([0, 0, 1.0], 5.0))
        T = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert geo.corner_error(scene.homography, T, 64, 64) < 1e-9

    def test_audit_and_depth_round_trip(self):
        for seed in range(3):
            scene = synth.make_planar_scene(seed)
            assert synth.audit(scene)
            assert (scene.depth_A > 0).all() and (scene.depth_B > 0).all()

    def test_seeded_determinism(self):
        a, b = synth.make_planar_scene(7), synth.make_planar_scene(7)
        np.testing.assert_array_equal(a.image_A, b.image_A)
        np.testing.assert_array_equal(a.image_B, b.image_B)
        np.testing.assert_array_equal(a.depth_B, b.depth_B)
        assert not np.array_equal(a.image_A, synth.make_planar_scene(8).image_A)

    def test_dims_checked(self):
        with pytest.raises(ValueError):
            synth.make_planar_scene(0, H=60, W=64)

    def test_behind_camera_gives_up(self):
        pose = geo.RelativePose(np.eye(3), [0.0, 0.0, -10.0])
        with pytest.raises(ValueError):
            synth.make_planar_scene(0, H=64, W=64, pose=pose, plane=([0, 0, 1.0], 5.0))

    def test_audit_catches_bad_geometry(self):
        scene = synth.make_planar_scene(0, H=64, W=64)
        scene.homography = scene.homography @ np.diag([1.01, 1.0, 1.0])
        with pytest.raises(AssertionError):
            synth.audit(scene)


class TestOtherScenes:
    def test_shift_scene_flow(self, shift_scene):
        x = np.array([[40.0, 30.0]])
        xb, _, _ = geo.warp_point(x, shift_scene.depth_A[30:31, 40], shift_scene.K_A, shift_scene.K_B, shift_scene.pose)
        np.testing.assert_allclose(xb, [[48.0, 34.5]], atol=1e-9)

    def test_multiplane_has_two_depth_slopes(self):
        scene = synth.make_multiplane_scene(0)
        assert synth.audit(scene)
        assert scene.homography is None and len(scene.planes) == 2

    def test_occlusion_labels(self):
        scene = synth.make_occlusion_scene(2, fraction=0.2)
        assert synth.audit(scene)
        assert abs(scene.occluder_B.mean() - 0.2) < 8 * 8 / scene.occluder_B.size * 4
        _, lb = scene.labels()
        inner = scene.occluder_B[4::8, 4::8]
        # cells whose whole 8x8 block is occluder are non-covisible; background cells are covisible
        blocks = scene.occluder_B.reshape(16, 8, 20, 8)
        full = blocks.all(axis=(1, 3))
        empty = ~blocks.any(axis=(1, 3))
        assert not lb[full].any()
        assert lb[empty].all()
        assert inner.sum() > 0

    def test_occlusion_fraction_checked(self):
        with pytest.raises(ValueError):
            synth.make_occlusion_scene(0, fraction=1.5)

    def test_make_scene_dispatch(self):
        assert synth.make_scene("shift", 0, H=64, W=64).kind == "shift"
        with pytest.raises(ValueError):
            synth.make_scene("sphere", 0)


class TestOracleFeatures:
    def test_corresponding_tokens_identical(self, shift_scene):
        of = synth.oracle_features(shift_scene, d=64)
        # a flow of (8, 4.5) px maps token (r, c) of A to within a cell of (r, c + 1) in B
        a, b = of.coarse_A[3, 5], of.coarse_B[3, 6]
        np.testing.assert_allclose(np.linalg.norm(of.coarse_A, axis=-1), 1.0, atol=1e-5)
        assert float(a @ b) > 0.5

    def test_exact_correspondence_inner_product(self):
        # integer one-cell shift: codes of corresponding tokens coincide
        scene = synth.make_shift_scene(1, shift=(8.0, 0.0), H=64, W=64)
        of = synth.oracle_features(scene, d=64)
        dots = np.sum(of.coarse_A[:, :-1] * of.coarse_B[:, 1:], axis=-1)
        np.testing.assert_allclose(dots, 1.0, atol=1e-5)

    def test_distinct_points_separated(self):
        freqs = synth.ring_frequencies(synth.COARSE_MAGNITUDES, 32)
        grid = np.stack(np.meshgrid(np.arange(-40, 41, 0.5), np.arange(-40, 41, 0.5)), -1).reshape(-1, 2)
        far = np.hypot(*grid.T) >= 8.0
        codes = synth.sinusoid_codes(grid[far], freqs)
        origin = synth.sinusoid_codes(np.zeros((1, 2)), freqs)[0]
        assert (codes @ origin).max() < 0.9

    def test_recovers_gt_coarse_matches_on_16x16_grid(self):
        scene = synth.make_planar_scene(0, H=128, W=128, max_rot_deg=3, max_tilt_deg=0, baseline=(0.2, 0.4))
        of = synth.oracle_features(scene)
        got = set(mnn_filter(dual_softmax(correlation_matrix(of.coarse_A, of.coarse_B)), 0.1).pairs())
        gt = geo.gt_coarse_matches(
            scene.depth_A, scene.depth_B, scene.K_A, scene.K_B, scene.pose, (16, 16),
            depth_values=synth.token_depths(scene.depth_A, 16, 16),
        )
        assert got == {tuple(p) for p in gt.tolist()}

    def test_odd_dim_rejected(self, shift_scene):
        with pytest.raises(ValueError):
            synth.oracle_features(shift_scene, d=63)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        scene = synth.make_occlusion_scene(1, H=64, W=64)
        synth.save_scene(scene, tmp_path / "s")
        assert sorted(p.name for p in (tmp_path / "s").iterdir()) == [
            "depthA.tsr", "depthB.tsr", "geometry.json", "imageA.pgm", "imageB.pgm", "occluderB.tsr",
        ]
        back = synth.load_scene(tmp_path / "s")
        np.testing.assert_allclose(back.image_A, scene.image_A, atol=0.5 / 255 + 1e-7)
        np.testing.assert_array_equal(back.depth_B, scene.depth_B.astype(np.float32))
        np.testing.assert_array_equal(back.occluder_B, scene.occluder_B)
        np.testing.assert_allclose(back.pose.R, scene.pose.R)
        assert back.kind == "occlusion" and back.homography is None

    def test_missing_geometry(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            synth.load_scene(tmp_path)

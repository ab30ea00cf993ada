import numpy as np
import pytest

from mvreg import (
    CorrespondenceSet,
    DisconnectedInput,
    Edge,
    IndexOutOfRange,
    PipelineConfig,
    PointCloud,
    PoseGraph,
    RigidMotion,
    TooFewClouds,
    compose,
    geodesic_angle,
    invert,
    pairwise_chain_absolute,
    pre_align,
    relative_from_absolute,
    run_multiview,
    run_multiview_from_correspondences,
    transform_points,
)
from mvreg.synthetic import generate_scene, random_motion, scene_correspondences


def shared_scene_clouds(rng, n, points=60):
    """Scans of one shared point set, each expressed in its own frame.

    Features carry the shared coordinates, so cross-scan matching is exact
    and the true motion mapping scan i into scan j is M_j^-1 . M_i.
    """
    base = rng.uniform(-1.0, 1.0, size=(points, 3))
    truth = [random_motion(rng) for _ in range(n)]
    clouds = [
        PointCloud(transform_points(invert(m), base), base.copy()) for m in truth
    ]
    return clouds, truth


def gauge_fixed(truth):
    g0 = invert(truth[0])
    return [compose(g0, m) for m in truth]


class TestPreAlign:
    def test_moves_target_side_only(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(10, 3))
        tgt = rng.normal(size=(10, 3))
        c = CorrespondenceSet(pts, tgt, np.ones(10), np.zeros(10))
        m = random_motion(rng)
        out = pre_align(c, m)
        assert np.array_equal(out.source_pts, c.source_pts)
        assert np.allclose(out.target_pts, transform_points(m, tgt), atol=1e-12)
        assert np.array_equal(out.weights, c.weights)

    def test_identity_is_a_no_op(self):
        rng = np.random.default_rng(1)
        c = CorrespondenceSet(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)), np.ones(5), np.zeros(5))
        out = pre_align(c, RigidMotion.identity())
        assert np.allclose(out.target_pts, c.target_pts, atol=1e-15)

    def test_composition(self):
        rng = np.random.default_rng(2)
        c = CorrespondenceSet(rng.normal(size=(8, 3)), rng.normal(size=(8, 3)), np.ones(8), np.zeros(8))
        a, b = random_motion(rng), random_motion(rng)
        twice = pre_align(pre_align(c, a), b)
        once = pre_align(c, compose(b, a))
        assert np.allclose(twice.target_pts, once.target_pts, atol=1e-12)


class TestPairwiseChain:
    def test_consistent_chain_recovers_truth(self):
        rng = np.random.default_rng(3)
        truth = [random_motion(rng) for _ in range(5)]
        edges = tuple(
            Edge(k, k + 1, relative_from_absolute(truth[k], truth[k + 1]), c_local=0.9)
            for k in range(4)
        )
        graph = PoseGraph(5, edges)
        absolute = pairwise_chain_absolute(graph)
        expected = gauge_fixed(truth)
        for a, e in zip(absolute, expected):
            assert np.linalg.norm(a.matrix - e.matrix) < 1e-9

    def test_anchor_is_identity(self):
        rng = np.random.default_rng(4)
        truth = [random_motion(rng) for _ in range(4)]
        edges = tuple(
            Edge(k, k + 1, relative_from_absolute(truth[k], truth[k + 1]), c_local=0.9)
            for k in range(3)
        )
        absolute = pairwise_chain_absolute(PoseGraph(4, edges))
        assert np.array_equal(absolute[0].matrix, np.eye(4))

    def test_disconnected_raises(self):
        rng = np.random.default_rng(5)
        m = random_motion(rng)
        g = PoseGraph(4, (Edge(0, 1, m, c_local=0.9), Edge(2, 3, m, c_local=0.9)))
        with pytest.raises(DisconnectedInput):
            pairwise_chain_absolute(g)


class TestRunMultiviewBasics:
    def test_three_identical_clouds_register_to_identity(self):
        rng = np.random.default_rng(6)
        base = rng.uniform(-1, 1, size=(40, 3))
        clouds = [PointCloud(base.copy(), base.copy()) for _ in range(3)]
        result, trace = run_multiview(clouds, PipelineConfig(temperature=1e-6))
        for m in result.absolute:
            assert np.linalg.norm(m.matrix - np.eye(4)) < 1e-9
        assert not result.disconnected
        assert len(trace.iterations) == 4

    def test_noise_free_scans_recover_truth(self):
        rng = np.random.default_rng(7)
        clouds, truth = shared_scene_clouds(rng, 4)
        result, _ = run_multiview(clouds, PipelineConfig(temperature=1e-6))
        expected = gauge_fixed(truth)
        for a, e in zip(result.absolute, expected):
            assert geodesic_angle(a.rotation, e.rotation) < 1e-6
            assert np.linalg.norm(a.translation - e.translation) < 1e-6

    def test_too_few_clouds(self):
        rng = np.random.default_rng(8)
        clouds, _ = shared_scene_clouds(rng, 2)
        with pytest.raises(TooFewClouds):
            run_multiview(clouds)

    def test_connectivity_out_of_range(self):
        rng = np.random.default_rng(9)
        clouds, _ = shared_scene_clouds(rng, 4)
        cfg = PipelineConfig(connectivity=((0, 1), (1, 2), (2, 3), (0, 5)))
        with pytest.raises(IndexOutOfRange):
            run_multiview(clouds, cfg)

    def test_disconnected_connectivity(self):
        rng = np.random.default_rng(10)
        clouds, _ = shared_scene_clouds(rng, 4)
        cfg = PipelineConfig(temperature=1e-6, connectivity=((0, 1), (2, 3)))
        with pytest.raises(DisconnectedInput):
            run_multiview(clouds, cfg)

    def test_correspondence_keys_validated(self):
        rng = np.random.default_rng(11)
        c = CorrespondenceSet(rng.normal(size=(5, 3)), rng.normal(size=(5, 3)), np.ones(5), np.zeros(5))
        with pytest.raises(IndexOutOfRange):
            run_multiview_from_correspondences({(2, 1): c}, 3)
        with pytest.raises(TooFewClouds):
            run_multiview_from_correspondences({(0, 1): c}, 2)

    def test_ground_truth_length_validated(self):
        rng = np.random.default_rng(12)
        clouds, truth = shared_scene_clouds(rng, 3)
        with pytest.raises(ValueError):
            run_multiview(clouds, PipelineConfig(temperature=1e-6), ground_truth=truth[:2])


class TestRefinementQuality:
    def test_ten_scan_scene_improves_over_pairwise(self):
        scene = generate_scene(
            n_scans=10, pts_per_scan=400, noise_sigma=0.01,
            outlier_edge_fraction=0.2, seed=42,
        )
        cfg = PipelineConfig(connectivity=scene.edges)
        corr = scene_correspondences(scene, cfg.temperature)
        result, trace = run_multiview_from_correspondences(
            corr, 10, cfg, ground_truth=list(scene.ground_truth)
        )
        final = trace.iterations[-1]
        assert final.mean_rotation_deg <= np.mean(trace.pairwise_rotation_errors_deg)
        assert final.mean_rotation_deg < 5.0

    def test_iteration_stats_are_recorded(self):
        scene = generate_scene(
            n_scans=6, pts_per_scan=200, noise_sigma=0.005,
            outlier_edge_fraction=0.0, seed=7,
        )
        cfg = PipelineConfig(connectivity=scene.edges)
        corr = scene_correspondences(scene, cfg.temperature)
        _, trace = run_multiview_from_correspondences(
            corr, 6, cfg, ground_truth=list(scene.ground_truth)
        )
        assert [s.iteration for s in trace.iterations] == list(range(1, len(trace.iterations) + 1))
        actives = [s.active_edges for s in trace.iterations]
        assert all(a >= b for a, b in zip(actives, actives[1:]))
        for s in trace.iterations:
            assert s.rotation_errors_deg is not None
            assert np.isfinite(s.mean_rotation_deg)

    def test_aggressive_pruning_reports_last_valid_poses(self):
        # a ring with a pruning threshold no noisy edge can satisfy: pruning
        # disconnects the graph immediately and the first synchronization is
        # reported with the flag set
        rng = np.random.default_rng(13)
        clouds, _ = shared_scene_clouds(rng, 6)
        noisy = [
            PointCloud(c.points + 5e-3 * rng.normal(size=c.points.shape), c.features)
            for c in clouds
        ]
        ring = tuple((k, (k + 1) % 6) for k in range(6))
        strict = PipelineConfig(temperature=1e-6, connectivity=ring, tau_p=0.99)
        result, trace = run_multiview(noisy, strict)
        assert result.disconnected
        assert trace.disconnected
        assert len(trace.iterations) == 1
        single = PipelineConfig(
            temperature=1e-6, connectivity=ring, tau_p=0.99, outer_iterations=1
        )
        result_one, _ = run_multiview(noisy, single)
        for a, b in zip(result.absolute, result_one.absolute):
            assert np.array_equal(a.matrix, b.matrix)

    def test_noise_free_ring_survives_aggressive_pruning(self):
        # with exact measurements every confidence stays near 1, so even a
        # 0.99 threshold keeps the ring intact through all iterations
        rng = np.random.default_rng(14)
        clouds, _ = shared_scene_clouds(rng, 5)
        ring = tuple((k, (k + 1) % 5) for k in range(5))
        cfg = PipelineConfig(temperature=1e-6, connectivity=ring, tau_p=0.99)
        result, trace = run_multiview(clouds, cfg)
        assert not result.disconnected
        assert len(trace.iterations) == 4
        assert trace.iterations[-1].active_edges == 5


class TestPipelineInvariances:
    def test_determinism(self):
        scene = generate_scene(
            n_scans=5, pts_per_scan=150, noise_sigma=0.01,
            outlier_edge_fraction=0.2, seed=3,
        )
        cfg = PipelineConfig(connectivity=scene.edges)
        corr = scene_correspondences(scene, cfg.temperature)
        a, _ = run_multiview_from_correspondences(corr, 5, cfg)
        b, _ = run_multiview_from_correspondences(corr, 5, cfg)
        for ma, mb in zip(a.absolute, b.absolute):
            assert np.array_equal(ma.matrix, mb.matrix)

    def test_global_motion_conjugates_result(self):
        # moving every input cloud by the same rigid motion G conjugates
        # each recovered absolute pose by G
        rng = np.random.default_rng(15)
        clouds, _ = shared_scene_clouds(rng, 4)
        cfg = PipelineConfig(temperature=1e-6)
        base, _ = run_multiview(clouds, cfg)
        g = random_motion(rng)
        moved = [
            PointCloud(transform_points(g, c.points), c.features) for c in clouds
        ]
        shifted, _ = run_multiview(moved, cfg)
        for a, b in zip(base.absolute, shifted.absolute):
            expected = compose(compose(g, a), invert(g))
            assert np.linalg.norm(b.matrix - expected.matrix) < 1e-9

    def test_connectivity_order_is_canonicalized(self):
        rng = np.random.default_rng(16)
        clouds, _ = shared_scene_clouds(rng, 4)
        pairs = ((0, 1), (1, 2), (2, 3), (0, 3))
        swapped = ((1, 0), (2, 1), (3, 2), (3, 0))
        a, _ = run_multiview(clouds, PipelineConfig(temperature=1e-6, connectivity=pairs))
        b, _ = run_multiview(clouds, PipelineConfig(temperature=1e-6, connectivity=swapped))
        for ma, mb in zip(a.absolute, b.absolute):
            assert np.linalg.norm(ma.matrix - mb.matrix) < 1e-9

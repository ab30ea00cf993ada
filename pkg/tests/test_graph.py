import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvreg import (
    DuplicateEdge,
    Edge,
    EmptyResiduals,
    IndexOutOfRange,
    PairwiseResult,
    PoseGraph,
    RigidMotion,
    build_graph,
    cauchy_global_confidence,
    cauchy_scale,
    compose,
    harmonic_fuse,
    is_connected,
    prune_edges,
)
from mvreg.synthetic import random_motion


def pw(motion, confidence=0.9):
    n = 4
    return PairwiseResult(
        motion=motion,
        weights=np.ones(n),
        residuals=np.zeros(n),
        inlier_ratio=1.0,
        local_confidence=confidence,
    )


def chain_graph(n, rng, confidence=0.9):
    edges = tuple(
        Edge(k, k + 1, random_motion(rng), c_local=confidence) for k in range(n - 1)
    )
    return PoseGraph(n, edges)


class TestEdge:
    def test_requires_ordered_endpoints(self):
        m = RigidMotion.identity()
        with pytest.raises(ValueError):
            Edge(2, 1, m, c_local=0.5)
        with pytest.raises(ValueError):
            Edge(1, 1, m, c_local=0.5)
        with pytest.raises(ValueError):
            Edge(-1, 0, m, c_local=0.5)

    def test_confidence_range(self):
        m = RigidMotion.identity()
        with pytest.raises(ValueError):
            Edge(0, 1, m, c_local=1.5)
        with pytest.raises(ValueError):
            Edge(0, 1, m, c_local=0.5, c_global=-0.1)

    def test_fused_defaults_to_local(self):
        e = Edge(0, 1, RigidMotion.identity(), c_local=0.7)
        assert e.c_fused == 0.7
        assert e.c_global == 1.0
        assert e.active


class TestPoseGraph:
    def test_rejects_single_node(self):
        with pytest.raises(ValueError):
            PoseGraph(1, ())

    def test_rejects_out_of_range_edge(self):
        e = Edge(0, 5, RigidMotion.identity(), c_local=0.5)
        with pytest.raises(IndexOutOfRange):
            PoseGraph(3, (e,))

    def test_rejects_duplicate_edges(self):
        m = RigidMotion.identity()
        with pytest.raises(DuplicateEdge):
            PoseGraph(3, (Edge(0, 1, m, c_local=0.5), Edge(0, 1, m, c_local=0.6)))

    def test_reverse_query_inverts_motion(self):
        rng = np.random.default_rng(0)
        g = chain_graph(4, rng)
        for i, j in ((0, 1), (1, 2), (2, 3)):
            forward = g.relative_motion(i, j)
            backward = g.relative_motion(j, i)
            prod = compose(backward, forward)
            assert np.linalg.norm(prod.matrix - np.eye(4)) < 1e-12

    def test_edge_lookup_is_unordered(self):
        rng = np.random.default_rng(1)
        g = chain_graph(3, rng)
        assert g.edge(1, 0) is g.edge(0, 1)
        assert g.has_edge(2, 1) and not g.has_edge(0, 2)
        with pytest.raises(KeyError):
            g.edge(0, 2)


class TestBuildGraph:
    def test_initial_confidences(self):
        rng = np.random.default_rng(2)
        g = build_graph([(0, 1, pw(random_motion(rng), 0.8))], 2)
        e = g.edges[0]
        assert e.c_local == 0.8
        assert e.c_global == 1.0
        assert e.c_fused == 0.8
        assert e.active

    def test_reversed_pair_is_canonicalized(self):
        rng = np.random.default_rng(3)
        m = random_motion(rng)
        g = build_graph([(2, 0, pw(m))], 3)
        e = g.edges[0]
        assert (e.i, e.j) == (0, 2)
        # stored motion maps frame 0 into frame 2, i.e. the inverse of the
        # supplied 2 -> 0 measurement
        assert np.linalg.norm(compose(e.motion, m).matrix - np.eye(4)) < 1e-12

    def test_same_pair_in_both_orders_is_duplicate(self):
        rng = np.random.default_rng(4)
        entries = [(1, 2, pw(random_motion(rng))), (2, 1, pw(random_motion(rng)))]
        with pytest.raises(DuplicateEdge):
            build_graph(entries, 3)

    def test_out_of_range_and_self_loop(self):
        rng = np.random.default_rng(5)
        with pytest.raises(IndexOutOfRange):
            build_graph([(0, 3, pw(random_motion(rng)))], 3)
        with pytest.raises(IndexOutOfRange):
            build_graph([(1, 1, pw(random_motion(rng)))], 3)


class TestCauchyScale:
    def test_documented_value(self):
        assert cauchy_scale(np.array([1.0, 2.0, 3.0, 4.0, 100.0]), 3.0) == 4.446

    def test_oracle_recomputation(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            r = rng.uniform(0, 10, size=rng.integers(1, 30))
            gamma = rng.uniform(0.5, 5)
            mad = np.median(np.abs(r - np.median(r)))
            assert cauchy_scale(r, gamma) == max(1.482 * gamma * mad, 1e-9)

    def test_floor_for_identical_residuals(self):
        assert cauchy_scale(np.full(7, 2.5), 3.0) == 1e-9

    def test_empty_input(self):
        with pytest.raises(EmptyResiduals):
            cauchy_scale(np.array([]), 3.0)


class TestCauchyGlobalConfidence:
    def test_documented_values(self):
        assert cauchy_global_confidence(0.0, 2.0) == 1.0
        assert cauchy_global_confidence(2.0, 2.0) == 0.5
        assert abs(cauchy_global_confidence(18.0, 2.0) - 0.1) < 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            cauchy_global_confidence(1.0, 0.0)
        with pytest.raises(ValueError):
            cauchy_global_confidence(-1.0, 1.0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 1e6), st.floats(1e-9, 1e3))
    def test_range_and_monotonicity(self, r, b):
        c = cauchy_global_confidence(r, b)
        assert 0.0 < c <= 1.0
        assert cauchy_global_confidence(r + 1.0, b) < c


class TestHarmonicFuse:
    def test_equal_inputs_are_fixed_points(self):
        for beta in (0.5, 1.0, 2.0):
            for c in (0.0, 0.3, 1.0):
                assert abs(harmonic_fuse(c, c, beta) - c) < 1e-12

    def test_zero_local_confidence_dominates(self):
        assert harmonic_fuse(0.0, 1.0, 1.0) == 0.0
        assert harmonic_fuse(1.0, 0.0, 1.0) == 0.0

    def test_documented_value(self):
        assert abs(harmonic_fuse(0.4, 0.8, 1.0) - 0.53333333333333333) < 1e-12

    def test_beta_must_be_positive(self):
        with pytest.raises(ValueError):
            harmonic_fuse(0.5, 0.5, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_bounded_by_inputs_plain(self, cl, cg):
        f = harmonic_fuse(cl, cg, 1.0)
        assert min(cl, cg) - 1e-12 <= f <= max(cl, cg) + 1e-12

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.1, 10.0))
    def test_bounded_by_inputs_general_beta(self, cl, cg, beta):
        f = harmonic_fuse(cl, cg, beta)
        assert min(cl, cg) - 1e-12 <= f <= max(cl, cg) + 1e-12
        assert 0.0 <= f <= 1.0


class TestPruneAndConnectivity:
    def test_prune_deactivates_below_threshold(self):
        rng = np.random.default_rng(7)
        m = random_motion(rng)
        g = PoseGraph(
            3,
            (
                Edge(0, 1, m, c_local=0.9, c_fused=0.9),
                Edge(1, 2, m, c_local=0.2, c_fused=0.2),
            ),
        )
        pruned = prune_edges(g, 0.5)
        assert pruned.edge(0, 1).active
        assert not pruned.edge(1, 2).active
        # edges are retained in the structure even when inactive
        assert len(pruned.edges) == 2

    def test_prune_never_reactivates(self):
        rng = np.random.default_rng(8)
        m = random_motion(rng)
        e = Edge(0, 1, m, c_local=0.9, c_fused=0.9, active=False)
        g = PoseGraph(2, (e,))
        assert not prune_edges(g, 0.1).edge(0, 1).active

    def test_prune_threshold_monotone(self):
        rng = np.random.default_rng(9)
        m = random_motion(rng)
        confs = rng.uniform(0, 1, 10)
        edges = tuple(
            Edge(k, k + 1, m, c_local=c, c_fused=c) for k, c in enumerate(confs)
        )
        g = PoseGraph(11, edges)
        active_counts = [
            len(prune_edges(g, tau).active_edges()) for tau in np.linspace(0, 1, 21)
        ]
        assert all(a >= b for a, b in zip(active_counts, active_counts[1:]))

    def test_invalid_threshold(self):
        g = PoseGraph(2, (Edge(0, 1, RigidMotion.identity(), c_local=0.5),))
        with pytest.raises(ValueError):
            prune_edges(g, 1.5)

    def test_chain_is_connected(self):
        rng = np.random.default_rng(10)
        assert is_connected(chain_graph(6, rng))

    def test_missing_link_disconnects(self):
        rng = np.random.default_rng(11)
        m = random_motion(rng)
        g = PoseGraph(4, (Edge(0, 1, m, c_local=0.9), Edge(2, 3, m, c_local=0.9)))
        assert not is_connected(g)

    def test_inactive_edges_do_not_connect(self):
        rng = np.random.default_rng(12)
        g = chain_graph(5, rng)
        cut = g.with_edges(
            tuple(
                e if (e.i, e.j) != (2, 3) else Edge(2, 3, e.motion, e.c_local, active=False)
                for e in g.edges
            )
        )
        assert is_connected(g)
        assert not is_connected(cut)

    def test_isolated_node(self):
        rng = np.random.default_rng(13)
        m = random_motion(rng)
        g = PoseGraph(3, (Edge(0, 1, m, c_local=0.9),))
        assert not is_connected(g)
